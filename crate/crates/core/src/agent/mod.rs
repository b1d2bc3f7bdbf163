//! Agent core: the reason, execute, monitor loop.
//!
//! Each iteration builds the context (core prompt, user prompt, history),
//! asks the reasoner for a step, records token usage, executes the tool
//! calls through the gateway and evaluates guardrails. The agent has no
//! handle on the world other than a [`ToolGateway`].

mod context;
mod guardrails;
mod helpers;
mod ledger;
mod prompts;
mod reasoner;
mod remote;
mod scripted;
mod trace;

pub use context::{AgentContext, Message, Role, Segments};
pub use guardrails::{probe_unsafe_drones, GuardrailConfig, GuardrailMonitor, STATE_PROPERTIES};
pub use helpers::{is_helper, run_helper, HELPER_DISABLED, POLL_INTERVAL_S};
pub use ledger::{
    estimate_tokens, CompletionComponents, IterationTokens, PromptComponents, TokenLedger,
    TokenSource,
};
pub use prompts::{GuardrailId, PromptArtifact, PromptKind, PromptSet};
pub use reasoner::{Reasoner, ReasonerError, ReasonerStep, Usage};
pub use remote::{
    ChatTransport, RemoteConfig, RemoteReasoner, TransportError, UreqTransport, ENV_API_KEY,
    ENV_ENDPOINT, ENV_MODEL,
};
pub use scripted::{Fault, MissionKind, ScriptedReasoner};
pub use trace::{CallOrigin, Exchange, IterationRecord, RunTrace, Termination};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::gateway::{ToolCall, ToolCategory, ToolGateway, ToolResult, SCHEMA_VIOLATION};
use guardrails::Verdict;

pub const INFEASIBLE_PREFIX: &str = "INFEASIBLE:";
pub const MALFORMED_TOOL_CALL: &str = "malformed_tool_call";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub max_iterations: u32,
    /// Simulated seconds after which the run is cut off.
    pub sim_timeout_s: f64,
    /// Simulated time that passes while the reasoner produces a step.
    pub think_time_s: f64,
    pub guardrails: GuardrailConfig,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            max_iterations: 80,
            sim_timeout_s: 1800.0,
            think_time_s: 5.0,
            guardrails: GuardrailConfig::default(),
        }
    }
}

/// What the agent is told about the mission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionPrompt {
    pub mission_id: String,
    /// Id of the Thing publishing the mission parameters.
    pub mission_thing: String,
    pub text: String,
}

/// A reasoner failure, carrying everything recorded before it.
#[derive(Debug)]
pub struct AgentFailure {
    pub error: ReasonerError,
    pub trace: RunTrace,
}

impl std::fmt::Display for AgentFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "run aborted: {}", self.error)
    }
}

impl std::error::Error for AgentFailure {}

pub fn run_mission(
    mission: &MissionPrompt,
    reasoner: &mut dyn Reasoner,
    gateway: &dyn ToolGateway,
    prompts: &PromptSet,
    config: &AgentConfig,
) -> Result<RunTrace, AgentFailure> {
    let tools = gateway.list_tools();
    let helper_names: BTreeSet<String> = tools
        .iter()
        .filter(|t| t.category == ToolCategory::Helper)
        .map(|t| t.name.clone())
        .collect();
    let start = gateway.now();
    let mut trace = RunTrace::new(
        &mission.mission_id,
        &reasoner.name(),
        tools.iter().map(|t| t.name.clone()).collect(),
        start,
    );
    let mut ctx = AgentContext::new(
        &prompts.core_artifact(),
        &prompts.user_artifact(&mission.text, &mission.mission_thing),
    );
    let mut monitor = GuardrailMonitor::new(config.guardrails.clone());
    let mut used_ids: BTreeSet<String> = BTreeSet::new();

    loop {
        if ctx.iteration >= config.max_iterations {
            trace.termination = Termination::IterationCap;
            trace.termination_detail = Some(format!("{} iterations", config.max_iterations));
            break;
        }
        if gateway.now() - start >= config.sim_timeout_s {
            trace.termination = Termination::IterationCap;
            trace.termination_detail = Some(format!("simulated timeout of {} s", config.sim_timeout_s));
            break;
        }
        let index = ctx.iteration;
        let sim_time_s = gateway.now();
        let segments = ctx.segments();
        let step = match reasoner.step(&ctx, &tools) {
            Ok(s) => s.normalized(),
            Err(error) => {
                trace.termination = Termination::Error;
                trace.termination_detail = Some(error.to_string());
                trace.sim_end_s = gateway.now();
                return Err(AgentFailure { error, trace });
            }
        };
        let step = assign_call_ids(step, index, &mut used_ids);
        let (text, calls) = step.completion_parts();
        let counter = |s: &str| reasoner.count_tokens(s).unwrap_or(0);
        let has_counter = reasoner.count_tokens("").is_some();
        trace.ledger.record(
            index,
            step.usage,
            &segments,
            (&text, &calls),
            if has_counter { Some(&counter) } else { None },
        );
        ctx.push_assistant(
            step.final_text.clone().or_else(|| step.reasoning.clone()).unwrap_or_default(),
            step.tool_calls.clone(),
        );
        gateway.pause(config.think_time_s);
        ctx.iteration += 1;

        let mut record = IterationRecord {
            index,
            sim_time_s,
            step: step.clone(),
            results: Vec::new(),
            exchanges: Vec::new(),
            guardrails: Vec::new(),
        };

        if let Some(final_text) = &step.final_text {
            if final_text.trim_start().starts_with(INFEASIBLE_PREFIX) {
                trace.iterations.push(record);
                trace.termination = Termination::Infeasible;
                trace.termination_detail = Some(final_text.trim().to_string());
                break;
            }
            let mut fired: Vec<(GuardrailId, Option<String>)> = Vec::new();
            if config.guardrails.enabled {
                if !monitor.recently_verified(&trace.iterations) {
                    fired.push((GuardrailId::UnverifiedCompletion, None));
                }
                let offenders = probe_unsafe_drones(gateway, index, &mut record.exchanges);
                if !offenders.is_empty() {
                    fired.push((
                        GuardrailId::UnsafeTermination,
                        Some(format!("Still armed or airborne: {}.", offenders.join(", "))),
                    ));
                }
            }
            if fired.is_empty() {
                trace.iterations.push(record);
                trace.termination = Termination::Completed;
                break;
            }
            if let Some(stop) = inject(&mut ctx, &mut monitor, prompts, &mut record, fired) {
                trace.iterations.push(record);
                trace.termination = Termination::Infeasible;
                trace.termination_detail = Some(stop);
                break;
            }
            trace.iterations.push(record);
            continue;
        }

        for call in &step.tool_calls {
            let result = execute(gateway, call, &helper_names, &tools, &mut record.exchanges);
            ctx.push_tool(&call.call_id, &call.tool, result.render());
            record.results.push(result);
        }
        if monitor.observe(&step, &record.results) {
            let fired = vec![(GuardrailId::StalledExecution, None)];
            if let Some(stop) = inject(&mut ctx, &mut monitor, prompts, &mut record, fired) {
                trace.iterations.push(record);
                trace.termination = Termination::Infeasible;
                trace.termination_detail = Some(stop);
                break;
            }
        }
        trace.iterations.push(record);
    }
    trace.sim_end_s = gateway.now();
    Ok(trace)
}

/// Injects fired guardrails; returns a reason when one exceeded its cap.
fn inject(
    ctx: &mut AgentContext,
    monitor: &mut GuardrailMonitor,
    prompts: &PromptSet,
    record: &mut IterationRecord,
    fired: Vec<(GuardrailId, Option<String>)>,
) -> Option<String> {
    for (id, observation) in fired {
        record.guardrails.push(id);
        match monitor.detect(id) {
            Verdict::Inject => ctx.push_guardrail(&prompts.guardrail(id), observation.as_deref()),
            Verdict::CapExceeded => {
                return Some(format!(
                    "{id} detected more than {} times",
                    monitor.config().max_injections
                ))
            }
        }
    }
    None
}

fn assign_call_ids(mut step: ReasonerStep, iteration: u32, used: &mut BTreeSet<String>) -> ReasonerStep {
    for (k, call) in step.tool_calls.iter_mut().enumerate() {
        if call.call_id.is_empty() || used.contains(&call.call_id) {
            call.call_id = format!("call-{iteration:03}-{}", k + 1);
            let mut n = 0;
            while used.contains(&call.call_id) {
                n += 1;
                call.call_id = format!("call-{iteration:03}-{}-{n}", k + 1);
            }
        }
        used.insert(call.call_id.clone());
    }
    step
}

fn execute(
    gateway: &dyn ToolGateway,
    call: &ToolCall,
    helpers: &BTreeSet<String>,
    tools: &[crate::gateway::ToolDefinition],
    exchanges: &mut Vec<Exchange>,
) -> ToolResult {
    if !call.arguments.is_object() {
        let detail = match &call.arguments {
            Value::String(raw) => format!("arguments are not a JSON object: {raw}"),
            other => format!("arguments must be a JSON object, got {other}"),
        };
        return ToolResult::error(&call.call_id, MALFORMED_TOOL_CALL, detail);
    }
    if is_helper(&call.tool) {
        if !helpers.contains(&call.tool) {
            return ToolResult::error(
                &call.call_id,
                HELPER_DISABLED,
                format!("helper tool {} is not enabled for this mission", call.tool),
            );
        }
        let def = tools.iter().find(|t| t.name == call.tool).expect("listed helper");
        if let Err(v) = def.input_schema.validate(&call.arguments) {
            return ToolResult::error(&call.call_id, SCHEMA_VIOLATION, v.to_string());
        }
        return run_helper(gateway, call, exchanges);
    }
    let result = gateway.call_tool(call);
    exchanges.push(Exchange {
        origin: CallOrigin::Agent,
        sim_time_s: gateway.now(),
        call: call.clone(),
        result: result.clone(),
    });
    result
}
