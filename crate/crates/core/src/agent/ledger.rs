//! Per-iteration token accounting.
//!
//! `T_run = sum_i (T_prompt(i) + T_completion(i))`, with the prompt split into
//! system, user, history and tool-output segments and the completion into
//! text and tool-call payload.

use serde::{Deserialize, Serialize};

use super::context::Segments;
use super::reasoner::Usage;

/// Four characters per token, rounded up.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptComponents {
    pub system: u64,
    pub user: u64,
    pub history: u64,
    pub toolout: u64,
}

impl PromptComponents {
    pub fn sum(&self) -> u64 {
        self.system + self.user + self.history + self.toolout
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletionComponents {
    pub text: u64,
    pub toolcall: u64,
}

impl CompletionComponents {
    pub fn sum(&self) -> u64 {
        self.text + self.toolcall
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenSource {
    /// Totals reported by the reasoner.
    Reported,
    /// Totals from the local four-characters-per-token estimate.
    Estimate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationTokens {
    pub iteration: u32,
    pub prompt: u64,
    pub completion: u64,
    pub source: TokenSource,
    /// Present only when the components add up to `prompt` exactly.
    pub prompt_components: Option<PromptComponents>,
    /// Present only when the components add up to `completion` exactly.
    pub completion_components: Option<CompletionComponents>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLedger {
    pub iterations: Vec<IterationTokens>,
    pub total: u64,
}

impl TokenLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one reasoner step. `segments` is the context exactly as the
    /// reasoner saw it; `counter` is the reasoner's tokenizer if any.
    pub fn record(
        &mut self,
        iteration: u32,
        usage: Option<Usage>,
        segments: &Segments,
        completion_parts: (&str, &str),
        counter: Option<&dyn Fn(&str) -> u64>,
    ) -> &IterationTokens {
        let [system, user, history, toolout] = segments.all();
        let (text, calls) = completion_parts;
        let entry = match usage {
            Some(u) => {
                let prompt_components = counter
                    .map(|c| PromptComponents {
                        system: c(system),
                        user: c(user),
                        history: c(history),
                        toolout: c(toolout),
                    })
                    .filter(|p| p.sum() == u.prompt_tokens);
                let completion_components = counter
                    .map(|c| CompletionComponents {
                        text: c(text),
                        toolcall: c(calls),
                    })
                    .filter(|p| p.sum() == u.completion_tokens);
                IterationTokens {
                    iteration,
                    prompt: u.prompt_tokens,
                    completion: u.completion_tokens,
                    source: TokenSource::Reported,
                    prompt_components,
                    completion_components,
                }
            }
            None => IterationTokens {
                iteration,
                prompt: segments.all().iter().map(|s| estimate_tokens(s)).sum(),
                completion: estimate_tokens(text) + estimate_tokens(calls),
                source: TokenSource::Estimate,
                prompt_components: None,
                completion_components: None,
            },
        };
        self.total += entry.prompt + entry.completion;
        self.iterations.push(entry);
        self.iterations.last().expect("just pushed")
    }

    /// Recomputes the run total from the per-iteration records.
    pub fn recomputed_total(&self) -> u64 {
        self.iterations.iter().map(|i| i.prompt + i.completion).sum()
    }

    pub fn prompt_total(&self) -> u64 {
        self.iterations.iter().map(|i| i.prompt).sum()
    }

    pub fn completion_total(&self) -> u64 {
        self.iterations.iter().map(|i| i.completion).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_total_is_sum_of_iterations() {
        let mut l = TokenLedger::new();
        assert_eq!(l.total, 0);
        let seg = Segments::default();
        let u = |p, c| Some(Usage {
            prompt_tokens: p,
            completion_tokens: c,
        });
        l.record(0, u(100, 30), &seg, ("", ""), None);
        l.record(1, u(120, 20), &seg, ("", ""), None);
        assert_eq!(l.total, 270);
        assert_eq!(l.recomputed_total(), 270);
        assert!(l.iterations[0].prompt_components.is_none());
    }

    #[test]
    fn estimate_rounds_up() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abc"), 1);
        assert_eq!(estimate_tokens("abcde"), 2);
    }

    #[test]
    fn missing_usage_falls_back_to_estimate() {
        let mut l = TokenLedger::new();
        let seg = Segments {
            system: "12345678".into(),
            user: "1234".into(),
            ..Default::default()
        };
        let e = l.record(0, None, &seg, ("ok", ""), None).clone();
        assert_eq!(e.source, TokenSource::Estimate);
        assert_eq!(e.prompt, 3);
        assert_eq!(e.completion, 1);
        assert!(e.prompt_components.is_none());
    }
}
