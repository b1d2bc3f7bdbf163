use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::context::AgentContext;
use crate::gateway::{ToolCall, ToolDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// One model turn: either tool calls or a concluding text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasonerStep {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_text: Option<String>,
    /// Free text emitted alongside tool calls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reasoning: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

impl ReasonerStep {
    pub fn act(tool_calls: Vec<ToolCall>) -> Self {
        Self {
            tool_calls,
            final_text: None,
            reasoning: None,
            usage: None,
        }
    }

    pub fn conclude(text: impl Into<String>) -> Self {
        Self {
            tool_calls: Vec::new(),
            final_text: Some(text.into()),
            reasoning: None,
            usage: None,
        }
    }

    pub fn with_usage(mut self, usage: Usage) -> Self {
        self.usage = Some(usage);
        self
    }

    /// Restores the act-or-conclude shape: a step with no calls concludes.
    pub fn normalized(mut self) -> Self {
        if self.tool_calls.is_empty() {
            if self.final_text.is_none() {
                self.final_text = Some(self.reasoning.take().unwrap_or_default());
            }
        } else if let Some(text) = self.final_text.take() {
            self.reasoning = Some(match self.reasoning.take() {
                Some(r) => format!("{r}\n{text}"),
                None => text,
            });
        }
        self
    }

    pub fn is_final(&self) -> bool {
        self.final_text.is_some()
    }

    /// Text part and tool-call part of the completion.
    pub fn completion_parts(&self) -> (String, String) {
        let text = self
            .final_text
            .clone()
            .or_else(|| self.reasoning.clone())
            .unwrap_or_default();
        let calls = if self.tool_calls.is_empty() {
            String::new()
        } else {
            serde_json::to_string(&self.tool_calls).unwrap_or_default()
        };
        (text, calls)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ReasonerError {
    #[error("transport failed after retries: {0}")]
    Transport(String),
    #[error("could not parse model response: {0}")]
    Parse(String),
    #[error("unsupported mission {0}")]
    UnsupportedMission(String),
}

/// A single-function policy: context and tool definitions in, one step out.
pub trait Reasoner {
    fn name(&self) -> String;

    fn step(&mut self, ctx: &AgentContext, tools: &[ToolDefinition]) -> Result<ReasonerStep, ReasonerError>;

    /// The model's own tokenizer, when exposed.
    fn count_tokens(&self, _text: &str) -> Option<u64> {
        None
    }

    /// Sets the inference seed for reasoners that support one.
    fn reseed(&mut self, _seed: u64) {}
}
