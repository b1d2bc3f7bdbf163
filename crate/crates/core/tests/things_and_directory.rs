use std::sync::Arc;

use serde_json::{json, Value};

use swarmloop::agent::MissionKind;
use swarmloop::directory::{Directory, DirectoryError, ManualClock};
use swarmloop::eval::{Environment, MissionSpec};
use swarmloop::gateway::{ToolCall, ToolGateway, ToolResult, CALL_ACTION, LIST_WEB_THINGS, READ_PROPERTY};
use swarmloop::wot::{uav_td, ActionState, ThingDescription};

fn env(kind: MissionKind) -> Environment {
    MissionSpec::new(kind).build_environment().unwrap()
}

fn call(g: &dyn ToolGateway, tool: &str, arguments: Value) -> ToolResult {
    g.call_tool(&ToolCall {
        call_id: String::new(),
        tool: tool.into(),
        arguments,
    })
}

fn act(g: &dyn ToolGateway, thing: &str, action: &str, input: Value) -> ToolResult {
    let r = call(g, CALL_ACTION, json!({"thing": thing, "action": action, "input": input}));
    assert!(r.is_ok(), "{action} on {thing}: {r:?}");
    r
}

#[test]
fn list_web_things_mirrors_the_directory() {
    let e = env(MissionKind::Irrigation);
    let r = call(e.gateway.as_ref(), LIST_WEB_THINGS, json!({}));
    let listed: Vec<(String, String)> = r.payload["things"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| {
            assert!(t["title"].is_string());
            (t["id"].as_str().unwrap().to_string(), t["thing_class"].as_str().unwrap().to_string())
        })
        .collect();
    let expected: Vec<(String, String)> = e
        .directory
        .list()
        .into_iter()
        .map(|td| {
            let v = td.to_value();
            (td.id, v["thing_class"].as_str().unwrap().to_string())
        })
        .collect();
    assert_eq!(listed, expected);
    assert_eq!(listed.iter().filter(|(_, c)| c == "physical").count(), 15);
}

#[test]
fn goto_status_is_monotone_and_completes_within_bound() {
    let e = env(MissionKind::Formation);
    let g = e.gateway.as_ref();
    act(g, "uav-1", "arm", json!({}));
    act(g, "uav-1", "takeoff", json!({"alt": 20.0}));
    g.pause(9.0);
    let ack = act(g, "uav-1", "goto", json!({"x": 30.0, "y": 40.0, "alt": 20.0}));
    let id = ack.payload["output"]["action_id"].as_str().unwrap().to_string();
    let first = g.action_status("uav-1", &id).unwrap().state;
    assert!(matches!(first, ActionState::Accepted | ActionState::Running));

    // 50 m at 10 m/s is 50 ticks; allow one extra tick.
    let bound_ticks = 51;
    let mut states = vec![first];
    let mut done_at = None;
    for tick in 1..=80 {
        g.pause(0.1);
        let s = g.action_status("uav-1", &id).unwrap().state;
        states.push(s);
        if s == ActionState::Completed && done_at.is_none() {
            done_at = Some(tick);
        }
    }
    assert!(states.windows(2).all(|w| w[0] <= w[1]), "{states:?}");
    let done_at = done_at.expect("goto never completed");
    assert!(done_at <= bound_ticks, "completed after {done_at} ticks");
    assert!(g.action_status("uav-1", "act-does-not-exist").is_err());
}

#[test]
fn property_reads_do_not_advance_the_world() {
    let e = env(MissionKind::Formation);
    let g = e.gateway.as_ref();
    let before = e.servient.snapshot();
    for _ in 0..5 {
        let a = call(g, READ_PROPERTY, json!({"thing": "uav-2", "property": "position"}));
        let b = call(g, READ_PROPERTY, json!({"thing": "uav-2", "property": "position"}));
        assert_eq!(a.payload, b.payload);
    }
    assert_eq!(e.servient.snapshot(), before);
}

#[test]
fn every_invocable_affordance_is_declared() {
    let e = env(MissionKind::Irrigation);
    let g = e.gateway.as_ref();
    for td in e.directory.list() {
        let doc = td.to_value();
        for (name, _) in doc["properties"].as_object().unwrap() {
            let r = call(g, READ_PROPERTY, json!({"thing": td.id, "property": name}));
            assert!(r.is_ok(), "{}.{name}: {r:?}", td.id);
        }
        let r = call(g, READ_PROPERTY, json!({"thing": td.id, "property": "undeclared"}));
        assert_eq!(r.error_code.as_deref(), Some("unknown_affordance"));
        let r = call(g, CALL_ACTION, json!({"thing": td.id, "action": "undeclared", "input": {}}));
        assert_eq!(r.error_code.as_deref(), Some("unknown_affordance"));
        for form in doc["forms"].as_array().unwrap() {
            let aff = form["affordance"].as_str().unwrap();
            let declared = doc["properties"].get(aff).is_some() || doc["actions"].get(aff).is_some();
            assert!(declared, "{} form for undeclared {aff}", td.id);
        }
    }
}

#[test]
fn td_serialization_is_canonical() {
    let e = env(MissionKind::Irrigation);
    for td in e.directory.list() {
        let once = ThingDescription::from_json_str(&td.to_json_string()).unwrap().to_json_string();
        let twice = ThingDescription::from_json_str(&once).unwrap().to_json_string();
        assert_eq!(once, twice);
        assert_eq!(once, td.to_json_string());
    }
}

#[test]
fn expired_registration_disappears_everywhere() {
    let clock = Arc::new(ManualClock::new(100.0));
    let dir = Directory::new(clock.clone());
    dir.register(uav_td("uav-1", 1), Some(1.0)).unwrap();
    dir.register(uav_td("uav-2", 2), None).unwrap();
    assert_eq!(dir.query("$.actions.takeoff").unwrap().len(), 2);
    clock.advance(2.0);
    let ids: Vec<String> = dir.list().into_iter().map(|t| t.id).collect();
    assert_eq!(ids, ["uav-2"]);
    assert_eq!(dir.query("$.actions.takeoff").unwrap().len(), 1);
    assert!(matches!(dir.get("uav-1"), Err(DirectoryError::UnknownId(_))));
    // The id is free again once its entry has expired.
    dir.register(uav_td("uav-1", 1), None).unwrap();
    assert_eq!(dir.list().len(), 2);
}

#[test]
fn refreshing_an_entry_extends_its_lifetime() {
    let clock = Arc::new(ManualClock::new(0.0));
    let dir = Directory::new(clock.clone());
    dir.register(uav_td("uav-1", 1), Some(5.0)).unwrap();
    clock.advance(4.0);
    let e = dir.touch("uav-1").unwrap();
    assert_eq!((e.registered_at, e.updated_at), (0.0, 4.0));
    clock.advance(4.0);
    assert!(dir.get("uav-1").is_ok());
    clock.advance(1.5);
    assert!(dir.get("uav-1").is_err());
}

#[test]
fn query_order_is_by_id_and_duplicates_rejected() {
    let dir = Directory::default();
    for i in [7, 3, 10, 1] {
        dir.register(uav_td(&format!("uav-{i}"), i), None).unwrap();
    }
    let ids: Vec<String> = dir.query("$.properties.position").unwrap().into_iter().map(|t| t.id).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    assert!(matches!(
        dir.register(uav_td("uav-3", 3), None),
        Err(DirectoryError::DuplicateId(_))
    ));
}

#[test]
fn directory_survives_a_save_and_load() {
    let e = env(MissionKind::CoverageWithTool);
    let file = tempfile::NamedTempFile::new().unwrap();
    e.directory.save(file.path()).unwrap();
    let back = Directory::load(file.path(), Arc::new(ManualClock::new(0.0))).unwrap();
    let a: Vec<String> = e.directory.list().iter().map(|t| t.to_json_string()).collect();
    let b: Vec<String> = back.list().iter().map(|t| t.to_json_string()).collect();
    assert_eq!(a, b);
}
