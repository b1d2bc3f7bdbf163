use serde::{Deserialize, Serialize};

use super::ledger::TokenLedger;
use super::prompts::GuardrailId;
use super::reasoner::ReasonerStep;
use crate::gateway::{ToolCall, ToolResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Infeasible,
    IterationCap,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallOrigin {
    /// Issued by the reasoner.
    Agent,
    /// Issued by a helper tool on the reasoner's behalf.
    Helper,
    /// Issued by a guardrail check.
    Probe,
}

/// One gateway round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub origin: CallOrigin,
    pub sim_time_s: f64,
    pub call: ToolCall,
    pub result: ToolResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: u32,
    /// Simulated time when the reasoner was asked for this step.
    pub sim_time_s: f64,
    pub step: ReasonerStep,
    /// One result per tool call of the step, in order.
    pub results: Vec<ToolResult>,
    /// Every gateway call made during the iteration, in order.
    pub exchanges: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub guardrails: Vec<GuardrailId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub mission_id: String,
    pub reasoner: String,
    pub tools: Vec<String>,
    pub iterations: Vec<IterationRecord>,
    pub ledger: TokenLedger,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination_detail: Option<String>,
    pub sim_start_s: f64,
    pub sim_end_s: f64,
}

impl RunTrace {
    pub fn new(mission_id: &str, reasoner: &str, tools: Vec<String>, sim_start_s: f64) -> Self {
        Self {
            mission_id: mission_id.to_string(),
            reasoner: reasoner.to_string(),
            tools,
            iterations: Vec::new(),
            ledger: TokenLedger::new(),
            termination: Termination::Error,
            termination_detail: None,
            sim_start_s,
            sim_end_s: sim_start_s,
        }
    }

    /// All gateway exchanges in issue order.
    pub fn exchanges(&self) -> impl Iterator<Item = &Exchange> {
        self.iterations.iter().flat_map(|i| i.exchanges.iter())
    }

    pub fn guardrail_count(&self, id: GuardrailId) -> usize {
        self.iterations
            .iter()
            .flat_map(|i| i.guardrails.iter())
            .filter(|g| **g == id)
            .count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}
