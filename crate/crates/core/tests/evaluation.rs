use serde_json::json;

use swarmloop::agent::{
    AgentConfig, AgentContext, CallOrigin, Exchange, Fault, IterationRecord, MissionKind, PromptSet, Reasoner,
    ReasonerError, ReasonerStep, RunTrace, ScriptedReasoner, Termination,
};
use swarmloop::eval::{
    count_collisions, measure_energy, measure_exec_time, run_batch, run_single, score_coverage_no_tool,
    score_formation, score_irrigation, score_run, BatchOptions, BatchReport, MissionSpec, Reason, RunRecord,
    SuccessClass,
};
use swarmloop::gateway::{ToolCall, ToolDefinition, ToolResult, CALL_ACTION};
use swarmloop::planners::plan_drone_formation;
use swarmloop::sim::{CollisionEvent, World, WorldConfig, WorldSnapshot};

fn sample(k: usize, device: &str, value: f64) -> Exchange {
    let call = ToolCall {
        call_id: format!("s{k}"),
        tool: CALL_ACTION.into(),
        arguments: json!({"thing": device, "action": "sample", "input": {"requester_id": "uav-1"}}),
    };
    let result = ToolResult::ok(&call.call_id, json!({"output": {"device": device, "value": value}}));
    Exchange {
        origin: CallOrigin::Agent,
        sim_time_s: k as f64,
        call,
        result,
    }
}

fn trace_with(exchanges: Vec<Exchange>) -> RunTrace {
    let mut trace = RunTrace::new("constructed", "none", vec![], 0.0);
    trace.iterations.push(IterationRecord {
        index: 0,
        sim_time_s: 0.0,
        step: ReasonerStep::act(exchanges.iter().map(|e| e.call.clone()).collect()),
        results: exchanges.iter().map(|e| e.result.clone()).collect(),
        exchanges,
        guardrails: vec![],
    });
    trace.termination = Termination::Completed;
    trace
}

fn irrigation_verdict(humidity: [f64; 3], temperature: f64, triggered: bool) -> (SuccessClass, Vec<Reason>) {
    let spec = MissionSpec::new(MissionKind::Irrigation);
    let (hum, temp, valve) = spec.sensor_layout().unwrap();
    let mut ex: Vec<Exchange> = hum.iter().zip(humidity).enumerate().map(|(k, (d, v))| sample(k, d, v)).collect();
    ex.push(sample(3, &temp, temperature));
    let mut world = spec.build_environment().unwrap().servient.snapshot();
    for d in world.devices.iter_mut().filter(|d| d.id == valve) {
        d.triggered = triggered;
    }
    let v = score_irrigation(&trace_with(ex), &world, &spec).unwrap();
    (v.class, v.reasons)
}

#[test]
fn irrigation_mean_humidity_at_threshold_requires_water() {
    assert_eq!(irrigation_verdict([50.0, 60.0, 61.0], 25.0, true), (SuccessClass::Full, vec![]));
    assert_eq!(
        irrigation_verdict([50.0, 60.0, 61.0], 25.0, false),
        (SuccessClass::Fail, vec![Reason::FalseNegative])
    );
}

#[test]
fn irrigation_temperature_branch() {
    assert_eq!(irrigation_verdict([60.0; 3], 30.0, true), (SuccessClass::Full, vec![]));
    assert_eq!(irrigation_verdict([60.0; 3], 29.9, false), (SuccessClass::Full, vec![]));
    assert_eq!(
        irrigation_verdict([60.0; 3], 29.9, true),
        (SuccessClass::Fail, vec![Reason::FalsePositive])
    );
}

#[test]
fn irrigation_without_all_readings_fails() {
    let spec = MissionSpec::new(MissionKind::Irrigation);
    let (hum, _, _) = spec.sensor_layout().unwrap();
    let world = spec.build_environment().unwrap().servient.snapshot();
    let v = score_irrigation(&trace_with(vec![sample(0, &hum[0], 40.0)]), &world, &spec).unwrap();
    assert_eq!(v.class, SuccessClass::Fail);
    assert!(v.reasons.contains(&Reason::MissingReadings));
}

fn world(n: usize) -> World {
    World::new(WorldConfig {
        n_drones: n,
        ..WorldConfig::default()
    })
    .unwrap()
}

fn fly_and_land(w: &mut World, id: &str, x: f64, y: f64) {
    w.cmd_arm(id).unwrap();
    w.cmd_takeoff(id, 10.0).unwrap();
    w.advance(5.0);
    w.cmd_goto(id, x, y, 10.0).unwrap();
    w.advance(40.0);
    w.cmd_land(id).unwrap();
    w.advance(10.0);
}

#[test]
fn coverage_no_tool_landing_positions() {
    let spec = MissionSpec::new(MissionKind::CoverageNoTool);

    let mut w = world(3);
    fly_and_land(&mut w, "uav-1", 200.0, 150.0);
    let v = score_coverage_no_tool(&w.snapshot(), &spec);
    assert_eq!(v.class, SuccessClass::Full, "{v:?}");

    let mut w = world(3);
    fly_and_land(&mut w, "uav-1", -20.0, -20.0);
    let v = score_coverage_no_tool(&w.snapshot(), &spec);
    assert_eq!(v.reasons, vec![Reason::OutsideRegion]);

    let mut w = world(3);
    w.cmd_arm("uav-2").unwrap();
    w.cmd_takeoff("uav-2", 10.0).unwrap();
    fly_and_land(&mut w, "uav-1", 5.0, 0.0);
    w.cmd_goto("uav-2", 100.0, 100.0, 10.0).unwrap();
    w.cmd_land("uav-1").ok();
    w.advance(30.0);
    w.cmd_land("uav-2").unwrap();
    w.advance(10.0);
    let snap = w.snapshot();
    assert!(count_collisions(&snap) >= 1);
    let v = score_coverage_no_tool(&snap, &spec);
    assert_eq!(v.class, SuccessClass::Fail);
    assert_eq!(v.reasons, vec![Reason::Collision]);
}

#[test]
fn head_on_crossing_counts_one_collision() {
    let mut w = world(2);
    for id in ["uav-1", "uav-2"] {
        w.cmd_arm(id).unwrap();
        w.cmd_takeoff(id, 10.0).unwrap();
    }
    w.advance(5.0);
    // uav-1 starts at x=0 and uav-2 at x=5; they swap sides at equal height.
    w.cmd_goto("uav-1", 40.0, 0.0, 10.0).unwrap();
    w.cmd_goto("uav-2", -35.0, 0.0, 10.0).unwrap();
    w.advance(10.0);
    assert_eq!(count_collisions(&w.snapshot()), 1);
}

#[test]
fn no_commands_means_no_cost() {
    struct Quit;
    impl Reasoner for Quit {
        fn name(&self) -> String {
            "quit".into()
        }
        fn step(&mut self, _: &AgentContext, _: &[ToolDefinition]) -> Result<ReasonerStep, ReasonerError> {
            Ok(ReasonerStep::conclude("INFEASIBLE: declined"))
        }
    }
    let spec = MissionSpec::new(MissionKind::Formation);
    let rec = run_single(&spec, &mut Quit, 0, 0, &AgentConfig::default(), &PromptSet::default()).unwrap();
    assert_eq!(measure_exec_time(&rec.trace), 0.0);
    assert_eq!(measure_energy(&rec.final_world), 0.0);
    assert_eq!(count_collisions(&rec.final_world), 0);
}

#[test]
fn energy_is_the_world_value_and_the_sum_of_battery_deltas() {
    let spec = MissionSpec::new(MissionKind::Formation).with_seed(4);
    let mut r = ScriptedReasoner::new(MissionKind::Formation);
    let rec = run_single(&spec, &mut r, 0, 4, &AgentConfig::default(), &PromptSet::default()).unwrap();
    let report = rec.report();
    assert_eq!(report.energy_mah, rec.final_world.energy_mah);
    let deltas: f64 = rec.final_world.drones.iter().map(|d| d.capacity_mah - d.battery_mah).sum();
    assert!((deltas - report.energy_mah).abs() < 1e-6, "{deltas} vs {}", report.energy_mah);
    assert!(report.exec_time_s > 0.0);
}

fn formation_record(fault: Option<Fault>) -> RunRecord {
    let spec = MissionSpec::new(MissionKind::Formation).with_seed(2);
    let mut r = ScriptedReasoner::new(MissionKind::Formation);
    if let Some(f) = fault {
        r = r.with_fault(f);
    }
    run_single(&spec, &mut r, 0, 2, &AgentConfig::default(), &PromptSet::default()).unwrap()
}

#[test]
fn formation_faults_are_early_exits() {
    assert!(formation_record(None).verdict().is_full());
    let v = formation_record(Some(Fault::LeaveOneHovering)).verdict();
    assert_eq!((v.class, v.reasons), (SuccessClass::EarlyExit, vec![Reason::NotLanded]));
    let v = formation_record(Some(Fault::RearmAfterLanding)).verdict();
    assert_eq!((v.class, v.reasons), (SuccessClass::EarlyExit, vec![Reason::NotDisarmed]));
}

#[test]
fn any_collision_fails_an_otherwise_full_run() {
    let mut rec = formation_record(None);
    rec.final_world.collisions.push(CollisionEvent {
        tick: 10,
        drone_a: "uav-1".into(),
        drone_b: "uav-2".into(),
        separation_m: 1.5,
    });
    let v = rec.verdict();
    assert_eq!(v.class, SuccessClass::Fail);
    assert_eq!(v.reasons, vec![Reason::Collision]);
}

#[test]
fn idle_world_has_no_star() {
    let spec = MissionSpec::new(MissionKind::Formation);
    let world: WorldSnapshot = spec.build_environment().unwrap().servient.snapshot();
    let f = &spec.formation;
    let plan = plan_drone_formation(f.shape, f.center, f.orientation_deg.to_radians(), f.spacing, 10, f.altitude).unwrap();
    let v = score_formation(&RunTrace::new("m", "none", vec![], 0.0), &world, &plan, &spec);
    assert_eq!((v.class, v.reasons), (SuccessClass::Fail, vec![Reason::NoStar]));
}

#[test]
fn coverage_without_a_plan_is_missing_plan() {
    let spec = MissionSpec::new(MissionKind::CoverageWithTool);
    let world = spec.build_environment().unwrap().servient.snapshot();
    let v = score_run(&spec, &RunTrace::new("m", "none", vec![], 0.0), &world);
    assert_eq!(v.reasons, vec![Reason::MissingPlan]);
}

#[test]
fn persisted_records_rescore_identically() {
    let dir = tempfile::tempdir().unwrap();
    let spec = MissionSpec::new(MissionKind::Irrigation).with_seed(7);
    let factory = |_: usize| -> Result<Box<dyn Reasoner + Send>, ReasonerError> {
        Ok(Box::new(ScriptedReasoner::new(MissionKind::Irrigation)))
    };
    let opts = BatchOptions {
        out_dir: Some(dir.path().to_path_buf()),
        ..BatchOptions::default()
    };
    let (batch, records) = run_batch(&spec, &factory, 3, 7, &opts).unwrap();
    let loaded = BatchReport::load(&dir.path().join("batch.json")).unwrap();
    assert_eq!(loaded, batch);
    for (report, record) in batch.runs.iter().zip(&records) {
        let back = RunRecord::load(&dir.path().join(report.trace_file.as_ref().unwrap())).unwrap();
        assert_eq!(&back, record);
        assert_eq!(back.verdict(), report.verdict);
        assert_eq!(back.report().tokens, report.tokens);
    }
}

struct AlwaysFails;

impl Reasoner for AlwaysFails {
    fn name(&self) -> String {
        "always-fails".into()
    }
    fn step(&mut self, _: &AgentContext, _: &[ToolDefinition]) -> Result<ReasonerStep, ReasonerError> {
        Err(ReasonerError::Transport("endpoint unreachable".into()))
    }
}

#[test]
fn failing_reasoner_gives_zero_success_and_no_means() {
    let spec = MissionSpec::new(MissionKind::Formation);
    let factory = |_: usize| -> Result<Box<dyn Reasoner + Send>, ReasonerError> { Ok(Box::new(AlwaysFails)) };
    let (batch, records) = run_batch(&spec, &factory, 3, 0, &BatchOptions::default()).unwrap();
    assert_eq!(batch.success_rate, 0.0);
    assert_eq!((batch.exec_time_s, batch.energy_mah, batch.tokens), (None, None, None));
    assert!(records.iter().all(|r| r.verdict().reasons == vec![Reason::RunError]));
    assert!(batch.summary_table().contains("N/A"));
}

#[test]
fn means_cover_full_runs_only() {
    let spec = MissionSpec::new(MissionKind::Formation).with_seed(1);
    let factory = |i: usize| -> Result<Box<dyn Reasoner + Send>, ReasonerError> {
        if i.is_multiple_of(2) {
            Ok(Box::new(ScriptedReasoner::new(MissionKind::Formation)))
        } else {
            Ok(Box::new(ScriptedReasoner::new(MissionKind::Formation).with_fault(Fault::LeaveOneHovering)))
        }
    };
    let (batch, _) = run_batch(&spec, &factory, 4, 1, &BatchOptions::default()).unwrap();
    assert_eq!(batch.full, 2);
    assert_eq!(batch.early_exit, 2);
    assert_eq!(batch.success_rate, 0.5);
    let full: Vec<f64> = batch.runs.iter().filter(|r| r.verdict.is_full()).map(|r| r.energy_mah).collect();
    let mean = full.iter().sum::<f64>() / full.len() as f64;
    assert!((batch.energy_mah.unwrap().mean - mean).abs() < 1e-9);
}

#[test]
fn parallel_batch_matches_sequential() {
    let spec = MissionSpec::new(MissionKind::CoverageWithTool).with_seed(9);
    let factory = |_: usize| -> Result<Box<dyn Reasoner + Send>, ReasonerError> {
        Ok(Box::new(ScriptedReasoner::new(MissionKind::CoverageWithTool)))
    };
    let seq = run_batch(&spec, &factory, 3, 9, &BatchOptions::default()).unwrap().0;
    let par = BatchOptions {
        parallel: true,
        ..BatchOptions::default()
    };
    assert_eq!(run_batch(&spec, &factory, 3, 9, &par).unwrap().0, seq);
    assert_eq!(seq.success_rate, 1.0);
}
