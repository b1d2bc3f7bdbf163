//! Helper tools executed inside the agent as compositions of core tools.

use serde_json::{json, Value};

use super::trace::{CallOrigin, Exchange};
use crate::gateway::{ToolCall, ToolGateway, ToolResult, CALL_ACTION, READ_PROPERTY, SEND_DRONES, WAIT_ARMED, WAIT_ARRIVED, WAIT_LANDED};

pub const HELPER_DISABLED: &str = "helper_disabled";

/// Polling cadence of the wait helpers, simulated seconds.
pub const POLL_INTERVAL_S: f64 = 1.0;

pub fn is_helper(tool: &str) -> bool {
    [SEND_DRONES, WAIT_ARMED, WAIT_ARRIVED, WAIT_LANDED].contains(&tool)
}

struct Runner<'a> {
    gateway: &'a dyn ToolGateway,
    parent: &'a str,
    seq: usize,
    exchanges: &'a mut Vec<Exchange>,
}

impl Runner<'_> {
    fn call(&mut self, tool: &str, arguments: Value) -> ToolResult {
        self.seq += 1;
        let call = ToolCall {
            call_id: format!("{}/{}", self.parent, self.seq),
            tool: tool.to_string(),
            arguments,
        };
        let result = self.gateway.call_tool(&call);
        self.exchanges.push(Exchange {
            origin: CallOrigin::Helper,
            sim_time_s: self.gateway.now(),
            call,
            result: result.clone(),
        });
        result
    }

    fn read(&mut self, thing: &str, property: &str) -> Result<Value, String> {
        let r = self.call(READ_PROPERTY, json!({"thing": thing, "property": property}));
        if r.is_ok() {
            Ok(r.payload["value"].clone())
        } else {
            Err(format!(
                "{}: {}",
                r.error_code.unwrap_or_default(),
                r.error_detail.unwrap_or_default()
            ))
        }
    }
}

/// Runs a validated helper call. Inner gateway calls are appended to
/// `exchanges`.
pub fn run_helper(
    gateway: &dyn ToolGateway,
    call: &ToolCall,
    exchanges: &mut Vec<Exchange>,
) -> ToolResult {
    let mut runner = Runner {
        gateway,
        parent: &call.call_id,
        seq: 0,
        exchanges,
    };
    let payload = match call.tool.as_str() {
        SEND_DRONES => send_drones(&mut runner, &call.arguments),
        WAIT_ARMED | WAIT_ARRIVED | WAIT_LANDED => wait_until(&mut runner, &call.tool, &call.arguments),
        other => return ToolResult::error(&call.call_id, "unknown_tool", format!("{other} is not a helper")),
    };
    ToolResult::ok(&call.call_id, payload)
}

fn send_drones(r: &mut Runner<'_>, args: &Value) -> Value {
    let targets = args["targets"].as_array().cloned().unwrap_or_default();
    let results: Vec<Value> = targets
        .iter()
        .map(|t| {
            let drone = t["drone"].as_str().unwrap_or_default();
            let res = r.call(
                CALL_ACTION,
                json!({
                    "thing": drone,
                    "action": "goto",
                    "input": {"x": t["x"], "y": t["y"], "alt": t["alt"]},
                }),
            );
            if res.is_ok() {
                json!({
                    "drone": drone,
                    "status": "ok",
                    "action_id": res.payload["output"]["action_id"],
                })
            } else {
                json!({
                    "drone": drone,
                    "status": "error",
                    "error_code": res.error_code,
                    "error_detail": res.error_detail,
                })
            }
        })
        .collect();
    json!({ "results": results })
}

#[derive(Clone)]
enum Check {
    Met(String),
    Pending(String),
    /// Can no longer become true without a new command.
    Dead(String),
}

fn check(r: &mut Runner<'_>, kind: &str, drone: &str) -> Check {
    match kind {
        WAIT_ARMED => match r.read(drone, "armed") {
            Ok(Value::Bool(true)) => Check::Met("armed".into()),
            Ok(_) => Check::Pending("not armed".into()),
            Err(e) => Check::Dead(e),
        },
        WAIT_LANDED => {
            let airborne = r.read(drone, "airborne");
            let armed = r.read(drone, "armed");
            match (airborne, armed) {
                (Ok(Value::Bool(false)), Ok(Value::Bool(false))) => Check::Met("landed and disarmed".into()),
                (Ok(a), Ok(b)) => Check::Pending(format!("airborne={a}, armed={b}")),
                (Err(e), _) | (_, Err(e)) => Check::Dead(e),
            }
        }
        _ => match r.read(drone, "action_status") {
            Ok(Value::Array(entries)) => {
                let latest = entries
                    .iter()
                    .rev()
                    .find(|e| matches!(e["action"].as_str(), Some("goto" | "takeoff")));
                match latest {
                    None => Check::Dead("no takeoff or goto issued".into()),
                    Some(e) => {
                        let state = e["state"].as_str().unwrap_or_default();
                        let detail = format!("{} {}", e["action"].as_str().unwrap_or_default(), state);
                        match state {
                            "completed" => Check::Met(detail),
                            "failed" => Check::Dead(format!(
                                "{detail}: {}",
                                e["detail"].as_str().unwrap_or_default()
                            )),
                            _ => Check::Pending(detail),
                        }
                    }
                }
            }
            Ok(_) => Check::Dead("action_status unavailable".into()),
            Err(e) => Check::Dead(e),
        },
    }
}

fn wait_until(r: &mut Runner<'_>, kind: &str, args: &Value) -> Value {
    let drones: Vec<String> = args["drones"]
        .as_array()
        .map(|a| a.iter().filter_map(|d| d.as_str().map(str::to_string)).collect())
        .unwrap_or_default();
    let timeout = args["timeout_s"].as_f64().unwrap_or(0.0);
    let start = r.gateway.now();
    loop {
        let checks: Vec<Check> = drones.iter().map(|d| check(r, kind, d)).collect();
        let elapsed = r.gateway.now() - start;
        let all_met = checks.iter().all(|c| matches!(c, Check::Met(_)));
        let any_pending = checks.iter().any(|c| matches!(c, Check::Pending(_)));
        if all_met || !any_pending || elapsed + 1e-9 >= timeout {
            let per_drone: Vec<Value> = drones
                .iter()
                .zip(&checks)
                .map(|(d, c)| {
                    let (ok, detail) = match c {
                        Check::Met(s) => (true, s),
                        Check::Pending(s) | Check::Dead(s) => (false, s),
                    };
                    json!({"drone": d, "satisfied": ok, "detail": detail})
                })
                .collect();
            return json!({
                "satisfied": all_met,
                "elapsed_s": elapsed,
                "per_drone": per_drone,
            });
        }
        r.gateway.pause(POLL_INTERVAL_S);
    }
}
