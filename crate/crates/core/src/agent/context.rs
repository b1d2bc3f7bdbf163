use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::prompts::{GuardrailId, PromptArtifact};
use crate::gateway::ToolCall;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub call_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guardrail: Option<GuardrailId>,
}

impl Message {
    fn plain(role: Role, content: String) -> Self {
        Self {
            role,
            content,
            tool_calls: Vec::new(),
            call_id: None,
            tool_name: None,
            guardrail: None,
        }
    }

    /// Text a token counter sees for this message.
    pub fn token_text(&self) -> String {
        if self.tool_calls.is_empty() {
            self.content.clone()
        } else {
            let calls = serde_json::to_string(&self.tool_calls).unwrap_or_default();
            format!("{}{}", self.content, calls)
        }
    }
}

/// Prompt text grouped the way the ledger attributes it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segments {
    pub system: String,
    pub user: String,
    pub history: String,
    pub toolout: String,
}

impl Segments {
    pub fn all(&self) -> [&str; 4] {
        [&self.system, &self.user, &self.history, &self.toolout]
    }
}

/// Append-only conversation state for one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AgentContext {
    messages: Vec<Message>,
    pub iteration: u32,
    pub injected_guardrails: BTreeMap<GuardrailId, u32>,
}

impl AgentContext {
    pub fn new(core: &PromptArtifact, user: &PromptArtifact) -> Self {
        let mut ctx = Self::default();
        ctx.messages.push(Message::plain(Role::System, core.text.clone()));
        ctx.messages.push(Message::plain(Role::User, user.text.clone()));
        ctx
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn push_assistant(&mut self, content: String, tool_calls: Vec<ToolCall>) {
        let mut m = Message::plain(Role::Assistant, content);
        m.tool_calls = tool_calls;
        self.messages.push(m);
    }

    /// Appends a tool result. Panics if no earlier assistant message issued
    /// `call_id`.
    pub fn push_tool(&mut self, call_id: &str, tool: &str, content: String) {
        assert!(
            self.messages
                .iter()
                .rev()
                .filter(|m| m.role == Role::Assistant)
                .any(|m| m.tool_calls.iter().any(|c| c.call_id == call_id)),
            "tool message for unknown call {call_id}"
        );
        let mut m = Message::plain(Role::Tool, content);
        m.call_id = Some(call_id.to_string());
        m.tool_name = Some(tool.to_string());
        self.messages.push(m);
    }

    pub fn push_guardrail(&mut self, artifact: &PromptArtifact, observation: Option<&str>) {
        let id = artifact.guardrail_id.expect("guardrail artifact");
        let content = match observation {
            Some(o) => format!("{}\n{}", artifact.text, o),
            None => artifact.text.clone(),
        };
        let mut m = Message::plain(Role::System, content);
        m.guardrail = Some(id);
        self.messages.push(m);
        *self.injected_guardrails.entry(id).or_default() += 1;
    }

    pub fn segments(&self) -> Segments {
        let mut s = Segments::default();
        for m in &self.messages {
            let target = match m.role {
                Role::System => &mut s.system,
                Role::User => &mut s.user,
                Role::Assistant => &mut s.history,
                Role::Tool => &mut s.toolout,
            };
            target.push_str(&m.token_text());
        }
        s
    }

    /// Contents of the tool messages that follow the latest assistant turn.
    pub fn latest_tool_results(&self) -> Vec<&Message> {
        let start = self
            .messages
            .iter()
            .rposition(|m| m.role == Role::Assistant)
            .map_or(self.messages.len(), |i| i + 1);
        self.messages[start..]
            .iter()
            .filter(|m| m.role == Role::Tool)
            .collect()
    }

    /// Guardrail messages injected after the latest assistant turn.
    pub fn pending_guardrails(&self) -> Vec<GuardrailId> {
        let start = self
            .messages
            .iter()
            .rposition(|m| m.role == Role::Assistant)
            .map_or(0, |i| i + 1);
        self.messages[start..].iter().filter_map(|m| m.guardrail).collect()
    }
}
