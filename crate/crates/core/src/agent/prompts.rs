//! Prompt artifacts: the core prompt, the user mission template and the
//! guardrail fragments. Defaults are compiled in and can be replaced from a
//! directory with the same layout as `prompts/`.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardrailId {
    UnverifiedCompletion,
    StalledExecution,
    UnsafeTermination,
}

impl GuardrailId {
    pub const ALL: [GuardrailId; 3] = [
        Self::UnverifiedCompletion,
        Self::StalledExecution,
        Self::UnsafeTermination,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::UnverifiedCompletion => "unverified_completion",
            Self::StalledExecution => "stalled_execution",
            Self::UnsafeTermination => "unsafe_termination",
        }
    }
}

impl fmt::Display for GuardrailId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Core,
    User,
    Guardrail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptArtifact {
    pub kind: PromptKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guardrail_id: Option<GuardrailId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    pub core: String,
    /// Template with `{{mission}}` and `{{mission_thing}}` placeholders.
    pub user_template: String,
    pub unverified_completion: String,
    pub stalled_execution: String,
    pub unsafe_termination: String,
}

impl Default for PromptSet {
    fn default() -> Self {
        Self {
            core: include_str!("../../prompts/core.txt").to_string(),
            user_template: include_str!("../../prompts/user_template.txt").to_string(),
            unverified_completion: include_str!("../../prompts/guardrails/unverified_completion.txt")
                .to_string(),
            stalled_execution: include_str!("../../prompts/guardrails/stalled_execution.txt").to_string(),
            unsafe_termination: include_str!("../../prompts/guardrails/unsafe_termination.txt")
                .to_string(),
        }
    }
}

impl PromptSet {
    /// Loads `core.txt`, `user_template.txt` and `guardrails/*.txt` from
    /// `dir`; missing files keep their defaults.
    pub fn load_dir(dir: &Path) -> std::io::Result<Self> {
        let mut set = Self::default();
        let slots: [(&str, &mut String); 5] = [
            ("core.txt", &mut set.core),
            ("user_template.txt", &mut set.user_template),
            ("guardrails/unverified_completion.txt", &mut set.unverified_completion),
            ("guardrails/stalled_execution.txt", &mut set.stalled_execution),
            ("guardrails/unsafe_termination.txt", &mut set.unsafe_termination),
        ];
        for (rel, slot) in slots {
            let path = dir.join(rel);
            if path.exists() {
                *slot = fs::read_to_string(path)?;
            }
        }
        Ok(set)
    }

    pub fn core_artifact(&self) -> PromptArtifact {
        PromptArtifact {
            kind: PromptKind::Core,
            text: self.core.trim_end().to_string(),
            guardrail_id: None,
        }
    }

    pub fn user_artifact(&self, mission_text: &str, mission_thing: &str) -> PromptArtifact {
        PromptArtifact {
            kind: PromptKind::User,
            text: self
                .user_template
                .replace("{{mission}}", mission_text)
                .replace("{{mission_thing}}", mission_thing)
                .trim_end()
                .to_string(),
            guardrail_id: None,
        }
    }

    pub fn guardrail(&self, id: GuardrailId) -> PromptArtifact {
        let text = match id {
            GuardrailId::UnverifiedCompletion => &self.unverified_completion,
            GuardrailId::StalledExecution => &self.stalled_execution,
            GuardrailId::UnsafeTermination => &self.unsafe_termination,
        };
        PromptArtifact {
            kind: PromptKind::Guardrail,
            text: text.trim_end().to_string(),
            guardrail_id: Some(id),
        }
    }
}
