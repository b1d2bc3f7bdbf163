//! Chat-completions reasoner with tool calling.
//!
//! Speaks the widely used `/chat/completions` wire format: the context is
//! sent as a message list together with function tool definitions, and the
//! reply's `tool_calls` and `usage` are parsed back into a [`ReasonerStep`].

use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use super::context::{AgentContext, Role};
use super::reasoner::{Reasoner, ReasonerError, ReasonerStep, Usage};
use crate::gateway::{ToolCall, ToolDefinition};

pub const ENV_ENDPOINT: &str = "SWARMLOOP_ENDPOINT";
pub const ENV_MODEL: &str = "SWARMLOOP_MODEL";
pub const ENV_API_KEY: &str = "SWARMLOOP_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    /// Worth retrying: connection problems, 429 and 5xx responses.
    #[error("transient transport error: {0}")]
    Transient(String),
    #[error("transport error: {0}")]
    Fatal(String),
}

/// Sends one request body and returns the decoded response body.
pub trait ChatTransport {
    fn post(&self, body: &Value) -> Result<Value, TransportError>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub temperature: Option<f64>,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key: None,
            temperature: None,
            max_retries: 3,
            backoff_base: Duration::from_millis(500),
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads endpoint, model and key from the environment.
    pub fn from_env() -> Result<Self, ReasonerError> {
        let get = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        let endpoint = get(ENV_ENDPOINT)
            .ok_or_else(|| ReasonerError::Transport(format!("{ENV_ENDPOINT} is not set")))?;
        let model = get(ENV_MODEL).ok_or_else(|| ReasonerError::Transport(format!("{ENV_MODEL} is not set")))?;
        let mut config = Self::new(endpoint, model);
        config.api_key = get(ENV_API_KEY);
        Ok(config)
    }
}

pub struct UreqTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl UreqTransport {
    pub fn new(config: &RemoteConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: config.endpoint.clone(),
            api_key: config.api_key.clone(),
        }
    }
}

impl ChatTransport for UreqTransport {
    fn post(&self, body: &Value) -> Result<Value, TransportError> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(body)
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Transient(e.to_string()))?;
        match status {
            200..=299 => serde_json::from_str(&text).map_err(|e| TransportError::Fatal(format!("invalid JSON body: {e}"))),
            429 | 500..=599 => Err(TransportError::Transient(format!("HTTP {status}: {text}"))),
            _ => Err(TransportError::Fatal(format!("HTTP {status}: {text}"))),
        }
    }
}

pub struct RemoteReasoner<T: ChatTransport = UreqTransport> {
    config: RemoteConfig,
    transport: T,
    seed: Option<u64>,
    sleep: fn(Duration),
}

impl RemoteReasoner<UreqTransport> {
    pub fn from_config(config: RemoteConfig) -> Self {
        let transport = UreqTransport::new(&config);
        Self::with_transport(config, transport)
    }
}

impl<T: ChatTransport> RemoteReasoner<T> {
    pub fn with_transport(config: RemoteConfig, transport: T) -> Self {
        Self {
            config,
            transport,
            seed: None,
            sleep: std::thread::sleep,
        }
    }

    /// Replaces the backoff sleep, for tests.
    pub fn with_sleep(mut self, sleep: fn(Duration)) -> Self {
        self.sleep = sleep;
        self
    }

    pub fn request_body(&self, ctx: &AgentContext, tools: &[ToolDefinition]) -> Value {
        let messages: Vec<Value> = ctx.messages().iter().map(wire_message).collect();
        let tools: Vec<Value> = tools
            .iter()
            .map(|t| {
                json!({
                    "type": "function",
                    "function": {
                        "name": t.name,
                        "description": t.description,
                        "parameters": t.input_schema.to_json(),
                    }
                })
            })
            .collect();
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "tools": tools,
        });
        if let Some(t) = self.config.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(s) = self.seed {
            body["seed"] = json!(s);
        }
        body
    }

    fn post_with_retries(&self, body: &Value) -> Result<Value, ReasonerError> {
        let mut attempt = 0;
        loop {
            match self.transport.post(body) {
                Ok(v) => return Ok(v),
                Err(TransportError::Transient(e)) if attempt < self.config.max_retries => {
                    (self.sleep)(self.config.backoff_base * 2u32.pow(attempt));
                    attempt += 1;
                    let _ = e;
                }
                Err(e) => return Err(ReasonerError::Transport(e.to_string())),
            }
        }
    }
}

fn wire_message(m: &super::context::Message) -> Value {
    match m.role {
        Role::System => json!({"role": "system", "content": m.content}),
        Role::User => json!({"role": "user", "content": m.content}),
        Role::Tool => json!({
            "role": "tool",
            "tool_call_id": m.call_id,
            "content": m.content,
        }),
        Role::Assistant => {
            let mut v = json!({"role": "assistant", "content": m.content});
            if !m.tool_calls.is_empty() {
                v["tool_calls"] = m
                    .tool_calls
                    .iter()
                    .map(|c| {
                        json!({
                            "id": c.call_id,
                            "type": "function",
                            "function": {
                                "name": c.tool,
                                "arguments": match &c.arguments {
                                    Value::String(raw) => raw.clone(),
                                    other => other.to_string(),
                                },
                            }
                        })
                    })
                    .collect();
            }
            v
        }
    }
}

/// Decodes a chat-completions response. Tool-call arguments that are not
/// valid JSON are kept as a raw string so the loop can report them.
pub fn parse_response(resp: &Value) -> Result<ReasonerStep, ReasonerError> {
    let message = resp
        .pointer("/choices/0/message")
        .ok_or_else(|| ReasonerError::Parse("response has no choices[0].message".into()))?;
    let content = message["content"].as_str().map(str::to_string).filter(|s| !s.is_empty());
    let mut tool_calls = Vec::new();
    if let Some(calls) = message["tool_calls"].as_array() {
        for c in calls {
            let name = c
                .pointer("/function/name")
                .and_then(Value::as_str)
                .ok_or_else(|| ReasonerError::Parse(format!("tool call without a function name: {c}")))?;
            let arguments = match c.pointer("/function/arguments") {
                Some(Value::String(raw)) if raw.trim().is_empty() => json!({}),
                Some(Value::String(raw)) => serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone())),
                Some(other) => other.clone(),
                None => json!({}),
            };
            tool_calls.push(ToolCall {
                call_id: c["id"].as_str().unwrap_or_default().to_string(),
                tool: name.to_string(),
                arguments,
            });
        }
    }
    let usage = match (
        resp.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
        resp.pointer("/usage/completion_tokens").and_then(Value::as_u64),
    ) {
        (Some(p), Some(c)) => Some(Usage {
            prompt_tokens: p,
            completion_tokens: c,
        }),
        _ => None,
    };
    let step = ReasonerStep {
        tool_calls,
        final_text: None,
        reasoning: content,
        usage,
    };
    Ok(step.normalized())
}

impl<T: ChatTransport> Reasoner for RemoteReasoner<T> {
    fn name(&self) -> String {
        format!("remote:{}", self.config.model)
    }

    fn step(&mut self, ctx: &AgentContext, tools: &[ToolDefinition]) -> Result<ReasonerStep, ReasonerError> {
        let body = self.request_body(ctx, tools);
        let resp = self.post_with_retries(&body)?;
        parse_response(&resp)
    }

    fn reseed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }
}
