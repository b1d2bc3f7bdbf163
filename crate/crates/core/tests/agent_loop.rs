use std::cell::RefCell;
use std::collections::VecDeque;

use serde_json::{json, Value};

use swarmloop::agent::{
    run_mission, AgentConfig, AgentContext, CallOrigin, ChatTransport, GuardrailId, MissionKind, PromptSet,
    Reasoner, ReasonerError, ReasonerStep, RemoteConfig, RemoteReasoner, RunTrace, ScriptedReasoner, Termination,
    TokenSource, TransportError, HELPER_DISABLED, MALFORMED_TOOL_CALL,
};
use swarmloop::eval::{run_single, MissionSpec};
use swarmloop::gateway::{
    ToolCall, ToolDefinition, ToolGateway, CALL_ACTION, LIST_WEB_THINGS, PLAN_AREA_COVERAGE, READ_PROPERTY,
    SEND_DRONES, WAIT_LANDED,
};

struct Steps(Vec<ReasonerStep>);

impl Reasoner for Steps {
    fn name(&self) -> String {
        "steps".into()
    }

    fn step(&mut self, ctx: &AgentContext, _tools: &[ToolDefinition]) -> Result<ReasonerStep, ReasonerError> {
        let i = (ctx.iteration as usize).min(self.0.len() - 1);
        Ok(self.0[i].clone())
    }
}

fn call(tool: &str, arguments: Value) -> ToolCall {
    ToolCall {
        call_id: String::new(),
        tool: tool.into(),
        arguments,
    }
}

fn action(thing: &str, name: &str, input: Value) -> ToolCall {
    call(CALL_ACTION, json!({"thing": thing, "action": name, "input": input}))
}

fn run(spec: &MissionSpec, steps: Vec<ReasonerStep>, config: &AgentConfig) -> RunTrace {
    let env = spec.build_environment().unwrap();
    run_mission(&spec.prompt(), &mut Steps(steps), env.gateway.as_ref(), &PromptSet::default(), config).unwrap()
}

fn drones(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("uav-{i}")).collect()
}

fn launch_all(n: usize) -> Vec<ReasonerStep> {
    vec![
        ReasonerStep::act(drones(n).iter().map(|d| action(d, "arm", json!({}))).collect()),
        ReasonerStep::act(drones(n).iter().map(|d| action(d, "takeoff", json!({"alt": 20.0}))).collect()),
    ]
}

#[test]
fn iteration_cap_after_one_iteration() {
    let spec = MissionSpec::new(MissionKind::Formation);
    let config = AgentConfig {
        max_iterations: 1,
        ..AgentConfig::default()
    };
    let trace = run(&spec, vec![ReasonerStep::act(vec![call(LIST_WEB_THINGS, json!({}))])], &config);
    assert_eq!(trace.termination, Termination::IterationCap);
    assert_eq!(trace.iterations.len(), 1);
}

#[test]
fn unsafe_termination_keeps_the_loop_running() {
    let spec = MissionSpec::new(MissionKind::Formation);
    let mut steps = launch_all(1);
    steps.push(ReasonerStep::act(vec![call(READ_PROPERTY, json!({"thing": "uav-1", "property": "airborne"}))]));
    steps.push(ReasonerStep::conclude("done"));
    let config = AgentConfig {
        max_iterations: 12,
        ..AgentConfig::default()
    };
    let trace = run(&spec, steps, &config);
    let first = trace.iterations.iter().position(|i| i.guardrails.contains(&GuardrailId::UnsafeTermination));
    assert_eq!(first, Some(3));
    assert!(trace.iterations.len() > 4);
}

#[test]
fn stall_fires_on_third_identical_poll() {
    let spec = MissionSpec::new(MissionKind::Formation);
    let poll = ReasonerStep::act(vec![call(READ_PROPERTY, json!({"thing": "uav-4", "property": "position"}))]);
    let config = AgentConfig {
        max_iterations: 3,
        ..AgentConfig::default()
    };
    let trace = run(&spec, vec![poll], &config);
    let fired: Vec<bool> = trace
        .iterations
        .iter()
        .map(|i| i.guardrails.contains(&GuardrailId::StalledExecution))
        .collect();
    assert_eq!(fired, [false, false, true]);
}

#[test]
fn guardrails_can_be_disabled() {
    let spec = MissionSpec::new(MissionKind::Formation);
    let mut config = AgentConfig::default();
    config.guardrails.enabled = false;
    let trace = run(&spec, vec![ReasonerStep::conclude("done")], &config);
    assert_eq!(trace.termination, Termination::Completed);
    assert_eq!(trace.iterations.len(), 1);
    assert!(trace.iterations[0].guardrails.is_empty());
}

#[test]
fn send_drones_fans_out_one_goto_per_target() {
    let spec = MissionSpec::new(MissionKind::Formation).with_helpers(true);
    let targets: Vec<Value> = drones(10)
        .iter()
        .enumerate()
        .map(|(i, d)| json!({"drone": d, "x": 20.0 + 5.0 * i as f64, "y": 50.0, "alt": 20.0}))
        .collect();
    let mut steps = launch_all(10);
    steps.push(ReasonerStep::act(vec![call(SEND_DRONES, json!({"targets": targets}))]));
    steps.push(ReasonerStep::conclude("INFEASIBLE: stop here"));
    let trace = run(&spec, steps, &AgentConfig::default());
    let it = &trace.iterations[2];
    let acks = it.results[0].payload["results"].as_array().unwrap();
    assert_eq!(acks.len(), 10);
    assert!(acks.iter().all(|a| a["status"] == "ok"));
    let inner: Vec<_> = it.exchanges.iter().filter(|e| e.origin == CallOrigin::Helper).collect();
    assert_eq!(inner.len(), 10);
    assert!(inner.iter().all(|e| e.call.tool == CALL_ACTION && e.call.arguments["action"] == "goto"));
}

#[test]
fn send_drones_reports_partial_failures() {
    let spec = MissionSpec::new(MissionKind::Formation).with_helpers(true);
    let targets = json!([
        {"drone": "uav-1", "x": 30.0, "y": 30.0, "alt": 20.0},
        {"drone": "uav-99", "x": 40.0, "y": 30.0, "alt": 20.0},
        {"drone": "uav-2", "x": 50.0, "y": 30.0, "alt": 20.0},
    ]);
    let mut steps = launch_all(2);
    steps.push(ReasonerStep::act(vec![call(SEND_DRONES, json!({"targets": targets}))]));
    steps.push(ReasonerStep::conclude("INFEASIBLE: stop here"));
    let trace = run(&spec, steps, &AgentConfig::default());
    let acks = trace.iterations[2].results[0].payload["results"].as_array().unwrap().clone();
    let status: Vec<&str> = acks.iter().map(|a| a["status"].as_str().unwrap()).collect();
    assert_eq!(status, ["ok", "error", "ok"]);
    assert_eq!(acks[1]["error_code"], "unknown_thing");
}

#[test]
fn helper_calls_rejected_when_disabled() {
    let spec = MissionSpec::new(MissionKind::Formation);
    let steps = vec![
        ReasonerStep::act(vec![call(WAIT_LANDED, json!({"drones": ["uav-1"], "timeout_s": 5.0}))]),
        ReasonerStep::conclude("INFEASIBLE: stop here"),
    ];
    let trace = run(&spec, steps, &AgentConfig::default());
    let r = &trace.iterations[0].results[0];
    assert_eq!(r.error_code.as_deref(), Some(HELPER_DISABLED));
}

#[test]
fn wait_with_zero_timeout_returns_immediately() {
    let spec = MissionSpec::new(MissionKind::Formation).with_helpers(true);
    let mut steps = launch_all(1);
    steps.push(ReasonerStep::act(vec![call(WAIT_LANDED, json!({"drones": ["uav-1"], "timeout_s": 0.0}))]));
    steps.push(ReasonerStep::conclude("INFEASIBLE: stop here"));
    let trace = run(&spec, steps, &AgentConfig::default());
    let it = &trace.iterations[2];
    assert_eq!(it.results[0].payload["satisfied"], false);
    assert_eq!(it.results[0].payload["elapsed_s"], 0.0);
}

#[test]
fn wait_until_landed_within_descent_bound() {
    let spec = MissionSpec::new(MissionKind::Formation).with_helpers(true);
    let mut steps = launch_all(3);
    steps.push(ReasonerStep::act(vec![call(
        "wait_until_arrived",
        json!({"drones": drones(3), "timeout_s": 60.0}),
    )]));
    steps.push(ReasonerStep::act(drones(3).iter().map(|d| action(d, "land", json!({}))).collect()));
    steps.push(ReasonerStep::act(vec![call(WAIT_LANDED, json!({"drones": drones(3), "timeout_s": 60.0}))]));
    steps.push(ReasonerStep::conclude("all landed"));
    let trace = run(&spec, steps, &AgentConfig::default());
    let arrived = &trace.iterations[2].results[0].payload;
    assert_eq!(arrived["satisfied"], true, "{arrived}");
    let landed = &trace.iterations[4].results[0].payload;
    assert_eq!(landed["satisfied"], true, "{landed}");
    // 20 m at 2.5 m/s plus one poll interval of slack.
    let bound = 20.0 / 2.5 + 1.0;
    assert!(landed["elapsed_s"].as_f64().unwrap() <= bound);
    assert_eq!(trace.termination, Termination::Completed);
}

#[test]
fn oracle_coverage_calls_planner_once() {
    let spec = MissionSpec::new(MissionKind::CoverageWithTool).with_seed(3);
    let mut r = ScriptedReasoner::new(MissionKind::CoverageWithTool);
    let rec = run_single(&spec, &mut r, 0, 3, &AgentConfig::default(), &PromptSet::default()).unwrap();
    let plans = rec.trace.exchanges().filter(|e| e.call.tool == PLAN_AREA_COVERAGE).count();
    assert_eq!(plans, 1);
}

#[test]
fn oracle_irrigation_collects_all_readings() {
    let spec = MissionSpec::new(MissionKind::Irrigation).with_seed(5);
    let mut r = ScriptedReasoner::new(MissionKind::Irrigation);
    let rec = run_single(&spec, &mut r, 0, 5, &AgentConfig::default(), &PromptSet::default()).unwrap();
    assert_eq!(rec.trace.termination, Termination::Completed);
    let readings = swarmloop::eval::readings_from_trace(&rec.trace);
    assert_eq!(readings.len(), 4, "{readings:?}");
}

struct Canned {
    replies: RefCell<VecDeque<Value>>,
    bodies: RefCell<Vec<Value>>,
}

impl Canned {
    fn new(replies: Vec<Value>) -> Self {
        Self {
            replies: RefCell::new(replies.into()),
            bodies: RefCell::new(Vec::new()),
        }
    }
}

impl ChatTransport for &Canned {
    fn post(&self, body: &Value) -> Result<Value, TransportError> {
        self.bodies.borrow_mut().push(body.clone());
        self.replies
            .borrow_mut()
            .pop_front()
            .ok_or_else(|| TransportError::Fatal("script exhausted".into()))
    }
}

fn tool_reply(id: &str, name: &str, arguments: &str) -> Value {
    json!({"choices": [{"message": {"role": "assistant", "content": null, "tool_calls": [
        {"id": id, "type": "function", "function": {"name": name, "arguments": arguments}}
    ]}}]})
}

fn text_reply(text: &str) -> Value {
    json!({"choices": [{"message": {"role": "assistant", "content": text}}]})
}

fn remote(transport: &Canned) -> RemoteReasoner<&Canned> {
    RemoteReasoner::with_transport(RemoteConfig::new("http://stub.invalid/v1/chat/completions", "stub"), transport)
        .with_sleep(|_| {})
}

#[test]
fn remote_stub_drives_a_goto() {
    let transport = Canned::new(vec![
        tool_reply("t1", CALL_ACTION, r#"{"thing":"uav-1","action":"arm","input":{}}"#),
        tool_reply("t2", CALL_ACTION, r#"{"thing":"uav-1","action":"takeoff","input":{"alt":10}}"#),
        tool_reply("t3", CALL_ACTION, r#"{"thing":"uav-1","action":"goto","input":{"x":30,"y":40,"alt":10}}"#),
        text_reply("INFEASIBLE: stub ends here"),
    ]);
    let spec = MissionSpec::new(MissionKind::Formation);
    let env = spec.build_environment().unwrap();
    let mut reasoner = remote(&transport);
    let trace = run_mission(
        &spec.prompt(),
        &mut reasoner,
        env.gateway.as_ref(),
        &PromptSet::default(),
        &AgentConfig::default(),
    )
    .unwrap();
    let goto = &trace.iterations[2];
    assert_eq!(goto.results.len(), 1);
    assert!(goto.results[0].is_ok(), "{:?}", goto.results[0]);
    assert_eq!(goto.results[0].call_id, "t3");
    assert_eq!(trace.termination, Termination::Infeasible);
    let target = env.servient.snapshot().drones[0].target;
    assert_eq!(target.map(|t| (t.x, t.y)), Some((30.0, 40.0)));
    // The tool result travels back to the endpoint on the next request.
    let bodies = transport.bodies.borrow();
    let last = bodies.last().unwrap()["messages"].as_array().unwrap();
    assert!(last.iter().any(|m| m["role"] == "tool" && m["tool_call_id"] == "t3"));
}

#[test]
fn malformed_arguments_become_an_error_result() {
    let transport = Canned::new(vec![
        tool_reply("t1", READ_PROPERTY, r#"{"thing": "uav-1", "property": "#),
        tool_reply("t2", READ_PROPERTY, r#"{"thing":"uav-1","property":"armed"}"#),
        text_reply("uav-1 is on the ground and disarmed"),
    ]);
    let spec = MissionSpec::new(MissionKind::Formation);
    let env = spec.build_environment().unwrap();
    let mut reasoner = remote(&transport);
    let trace = run_mission(
        &spec.prompt(),
        &mut reasoner,
        env.gateway.as_ref(),
        &PromptSet::default(),
        &AgentConfig::default(),
    )
    .unwrap();
    assert_eq!(trace.iterations[0].results[0].error_code.as_deref(), Some(MALFORMED_TOOL_CALL));
    assert!(trace.iterations[1].results[0].is_ok());
    assert_eq!(trace.termination, Termination::Completed);
}

#[test]
fn missing_usage_falls_back_to_the_estimate() {
    let transport = Canned::new(vec![text_reply("INFEASIBLE: nothing to do")]);
    let spec = MissionSpec::new(MissionKind::Formation);
    let env = spec.build_environment().unwrap();
    let mut reasoner = remote(&transport);
    let trace = run_mission(
        &spec.prompt(),
        &mut reasoner,
        env.gateway.as_ref(),
        &PromptSet::default(),
        &AgentConfig::default(),
    )
    .unwrap();
    let row = &trace.ledger.iterations[0];
    assert_eq!(row.source, TokenSource::Estimate);
    assert!(row.prompt > 0 && row.completion > 0);
    assert_eq!(trace.ledger.total, row.prompt + row.completion);
}

#[test]
fn reported_usage_is_used_verbatim() {
    let mut reply = text_reply("INFEASIBLE: nothing to do");
    reply["usage"] = json!({"prompt_tokens": 100, "completion_tokens": 30});
    let transport = Canned::new(vec![reply]);
    let spec = MissionSpec::new(MissionKind::Formation);
    let env = spec.build_environment().unwrap();
    let mut reasoner = remote(&transport);
    let trace = run_mission(
        &spec.prompt(),
        &mut reasoner,
        env.gateway.as_ref(),
        &PromptSet::default(),
        &AgentConfig::default(),
    )
    .unwrap();
    let row = &trace.ledger.iterations[0];
    assert_eq!((row.prompt, row.completion, row.source), (100, 30, TokenSource::Reported));
    assert_eq!(row.prompt_components, None);
    assert_eq!(trace.ledger.total, 130);
}

#[test]
fn agent_sees_the_world_only_through_the_gateway() {
    // A gateway wrapper that counts calls; every exchange in the trace must
    // have passed through it.
    struct Counting<'a> {
        inner: &'a dyn ToolGateway,
        calls: std::sync::Mutex<usize>,
    }
    impl ToolGateway for Counting<'_> {
        fn list_tools(&self) -> Vec<ToolDefinition> {
            self.inner.list_tools()
        }
        fn call_tool(&self, call: &ToolCall) -> swarmloop::gateway::ToolResult {
            *self.calls.lock().unwrap() += 1;
            self.inner.call_tool(call)
        }
        fn action_status(
            &self,
            thing: &str,
            id: &str,
        ) -> Result<swarmloop::gateway::ActionStatus, swarmloop::gateway::GatewayError> {
            self.inner.action_status(thing, id)
        }
        fn pause(&self, s: f64) {
            self.inner.pause(s)
        }
        fn now(&self) -> f64 {
            self.inner.now()
        }
    }
    let spec = MissionSpec::new(MissionKind::Formation).with_helpers(true);
    let env = spec.build_environment().unwrap();
    let counting = Counting {
        inner: env.gateway.as_ref(),
        calls: std::sync::Mutex::new(0),
    };
    let mut r = ScriptedReasoner::new(MissionKind::Formation);
    let trace = run_mission(&spec.prompt(), &mut r, &counting, &PromptSet::default(), &AgentConfig::default()).unwrap();
    assert_eq!(trace.termination, Termination::Completed);
    let helper_envelopes = trace
        .iterations
        .iter()
        .flat_map(|i| i.step.tool_calls.iter())
        .filter(|c| swarmloop::agent::is_helper(&c.tool))
        .count();
    assert_eq!(*counting.calls.lock().unwrap(), trace.exchanges().count());
    assert!(trace.exchanges().count() >= helper_envelopes);
}
