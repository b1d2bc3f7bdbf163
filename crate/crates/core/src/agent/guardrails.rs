use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::prompts::GuardrailId;
use super::reasoner::ReasonerStep;
use super::trace::{CallOrigin, Exchange, IterationRecord};
use crate::gateway::{
    ToolCall, ToolGateway, ToolResult, LIST_WEB_THINGS, READ_PROPERTY, WAIT_ARMED, WAIT_ARRIVED,
    WAIT_LANDED,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardrailConfig {
    pub enabled: bool,
    /// Identical consecutive iterations that count as a stall.
    pub stall_window: usize,
    /// Iterations searched for a state read before a conclusion.
    pub verify_lookback: usize,
    /// Injections allowed per guardrail; one more detection ends the run.
    pub max_injections: u32,
}

impl Default for GuardrailConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            stall_window: 3,
            verify_lookback: 5,
            max_injections: 3,
        }
    }
}

/// Drone properties whose read counts as state verification.
pub const STATE_PROPERTIES: [&str; 6] = ["position", "mode", "armed", "airborne", "battery", "action_status"];

#[derive(Debug, Clone, Default)]
pub struct GuardrailMonitor {
    config: GuardrailConfig,
    last_signature: Option<String>,
    run_length: usize,
    detections: BTreeMap<GuardrailId, u32>,
}

pub enum Verdict {
    Inject,
    CapExceeded,
}

impl GuardrailMonitor {
    pub fn new(config: GuardrailConfig) -> Self {
        Self {
            config,
            ..Default::default()
        }
    }

    pub fn config(&self) -> &GuardrailConfig {
        &self.config
    }

    /// Counts a detection and says whether it may still be injected.
    pub fn detect(&mut self, id: GuardrailId) -> Verdict {
        let n = self.detections.entry(id).or_default();
        *n += 1;
        if *n > self.config.max_injections {
            Verdict::CapExceeded
        } else {
            Verdict::Inject
        }
    }

    /// Feeds a completed acting iteration; true when it closes a stall
    /// window. The window restarts after each firing.
    pub fn observe(&mut self, step: &ReasonerStep, results: &[ToolResult]) -> bool {
        if !self.config.enabled || step.tool_calls.is_empty() {
            self.last_signature = None;
            self.run_length = 0;
            return false;
        }
        let sig = signature(step, results);
        if self.last_signature.as_deref() == Some(sig.as_str()) {
            self.run_length += 1;
        } else {
            self.run_length = 1;
            self.last_signature = Some(sig);
        }
        if self.run_length >= self.config.stall_window {
            self.run_length = 0;
            self.last_signature = None;
            return true;
        }
        false
    }

    /// True when one of the last `verify_lookback` iterations read drone
    /// state successfully.
    pub fn recently_verified(&self, history: &[IterationRecord]) -> bool {
        let k = self.config.verify_lookback;
        history
            .iter()
            .rev()
            .take(k)
            .flat_map(|it| it.exchanges.iter())
            .any(is_state_read)
            || history.iter().rev().take(k).any(|it| {
                it.step
                    .tool_calls
                    .iter()
                    .zip(&it.results)
                    .any(|(c, r)| r.is_ok() && [WAIT_ARMED, WAIT_ARRIVED, WAIT_LANDED].contains(&c.tool.as_str()))
            })
    }
}

fn is_state_read(e: &Exchange) -> bool {
    e.origin != CallOrigin::Probe
        && e.call.tool == READ_PROPERTY
        && e.result.is_ok()
        && e.call.arguments["property"]
            .as_str()
            .is_some_and(|p| STATE_PROPERTIES.contains(&p))
}

/// Order-insensitive fingerprint of (call, result) pairs, ignoring call ids.
fn signature(step: &ReasonerStep, results: &[ToolResult]) -> String {
    let mut pairs: Vec<String> = step
        .tool_calls
        .iter()
        .zip(results)
        .map(|(c, r)| {
            json!([c.tool, c.arguments, r.status, r.payload, r.error_code]).to_string()
        })
        .collect();
    pairs.sort();
    pairs.join("\n")
}

/// Reads `armed` and `airborne` of every UAV Thing through the gateway.
/// Returns the drones that are still armed or airborne.
pub fn probe_unsafe_drones(
    gateway: &dyn ToolGateway,
    iteration: u32,
    exchanges: &mut Vec<Exchange>,
) -> Vec<String> {
    let mut k = 0;
    let mut call = |tool: &str, arguments: Value| {
        k += 1;
        let call = ToolCall {
            call_id: format!("probe-{iteration:03}-{k}"),
            tool: tool.to_string(),
            arguments,
        };
        let result = gateway.call_tool(&call);
        exchanges.push(Exchange {
            origin: CallOrigin::Probe,
            sim_time_s: gateway.now(),
            call,
            result: result.clone(),
        });
        result
    };
    let listing = call(LIST_WEB_THINGS, json!({"query": "$[?(@['@type']=='uav')]"}));
    let ids: Vec<String> = listing.payload["things"]
        .as_array()
        .map(|things| {
            things
                .iter()
                .filter_map(|t| t["id"].as_str().map(str::to_string))
                .collect()
        })
        .unwrap_or_default();
    let mut offenders = Vec::new();
    for id in ids {
        let unsafe_now = ["armed", "airborne"].iter().any(|p| {
            let r = call(READ_PROPERTY, json!({"thing": id, "property": p}));
            r.payload["value"].as_bool().unwrap_or(false)
        });
        if unsafe_now {
            offenders.push(id);
        }
    }
    offenders
}
