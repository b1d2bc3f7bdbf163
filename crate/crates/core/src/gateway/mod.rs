//! Tool gateway: the agent's only route to the Things.
//!
//! Tools carry explicit input and output schemas and are validated on every
//! call. Drone actions return acknowledgements; completion is observed
//! later through property reads or [`ToolGateway::action_status`].

mod catalog;
mod jsonrpc;

pub use catalog::{
    core_tools, coverage_tool, formation_tool, helper_tools, ToolCategory, ToolDefinition,
    CALL_ACTION, LIST_WEB_THINGS, PLAN_AREA_COVERAGE, PLAN_DRONE_FORMATION, READ_PROPERTY,
    SEND_DRONES, WAIT_ARMED, WAIT_ARRIVED, WAIT_LANDED, WRITE_PROPERTY,
};
pub use jsonrpc::{serve_stdio, JsonRpcServer, RPC_DOMAIN_ERROR, RPC_INVALID_PARAMS};

use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::directory::Directory;
use crate::wot::{ActionRecord, AffordanceKind, ServiceKind, Servient, WotError};

pub const DEFAULT_OUTPUT_CAP: usize = 16 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub call_id: String,
    pub tool: String,
    pub arguments: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResult {
    pub call_id: String,
    pub status: ToolStatus,
    pub payload: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

impl ToolResult {
    pub fn ok(call_id: &str, payload: Value) -> Self {
        Self {
            call_id: call_id.to_string(),
            status: ToolStatus::Ok,
            payload,
            error_code: None,
            error_detail: None,
            truncated: false,
        }
    }

    pub fn error(call_id: &str, code: &str, detail: impl Into<String>) -> Self {
        Self {
            call_id: call_id.to_string(),
            status: ToolStatus::Error,
            payload: Value::Null,
            error_code: Some(code.to_string()),
            error_detail: Some(detail.into()),
            truncated: false,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == ToolStatus::Ok
    }

    /// Text shown to a model for this result.
    pub fn render(&self) -> String {
        match self.status {
            ToolStatus::Ok => self.payload.to_string(),
            ToolStatus::Error => json!({
                "error": self.error_code,
                "detail": self.error_detail,
            })
            .to_string(),
        }
    }
}

pub const UNKNOWN_TOOL: &str = "unknown_tool";
pub const SCHEMA_VIOLATION: &str = "schema_violation";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("unknown call {0}")]
    UnknownCall(String),
}

/// Completion view of an acknowledged action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionStatus {
    pub action_id: String,
    pub thing: String,
    pub action: String,
    pub state: crate::wot::ActionState,
    pub detail: String,
}

impl From<ActionRecord> for ActionStatus {
    fn from(r: ActionRecord) -> Self {
        Self {
            action_id: r.action_id,
            thing: r.thing,
            action: r.action,
            state: r.state,
            detail: r.detail,
        }
    }
}

/// The interface the agent sees. Implementations must route every world
/// interaction through `call_tool`; `pause` only lets simulated time pass.
pub trait ToolGateway: Send + Sync {
    fn list_tools(&self) -> Vec<ToolDefinition>;
    fn call_tool(&self, call: &ToolCall) -> ToolResult;
    fn action_status(&self, thing: &str, action_id: &str) -> Result<ActionStatus, GatewayError>;
    /// Lets `seconds` of simulated time elapse.
    fn pause(&self, seconds: f64);
    /// Current simulated time in seconds.
    fn now(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub coverage_planner: bool,
    pub formation_planner: bool,
    pub helpers: bool,
    pub output_cap_bytes: usize,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            coverage_planner: false,
            formation_planner: false,
            helpers: false,
            output_cap_bytes: DEFAULT_OUTPUT_CAP,
        }
    }
}

impl GatewayConfig {
    pub fn tools(&self) -> Vec<ToolDefinition> {
        let mut tools = core_tools();
        if self.coverage_planner {
            tools.push(coverage_tool());
        }
        if self.formation_planner {
            tools.push(formation_tool());
        }
        if self.helpers {
            tools.extend(helper_tools());
        }
        tools
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallLogEntry {
    pub sim_time_s: f64,
    pub call: ToolCall,
    pub result: ToolResult,
}

/// Gateway over an in-process servient and directory.
pub struct WotGateway {
    servient: Arc<Servient>,
    directory: Arc<Directory>,
    config: GatewayConfig,
    tools: Vec<ToolDefinition>,
    log: Mutex<Vec<CallLogEntry>>,
}

impl WotGateway {
    pub fn new(servient: Arc<Servient>, directory: Arc<Directory>, config: GatewayConfig) -> Self {
        let tools = config.tools();
        Self {
            servient,
            directory,
            config,
            tools,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn servient(&self) -> &Arc<Servient> {
        &self.servient
    }

    pub fn directory(&self) -> &Arc<Directory> {
        &self.directory
    }

    pub fn call_log(&self) -> Vec<CallLogEntry> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn definition(&self, name: &str) -> Option<&ToolDefinition> {
        self.tools.iter().find(|t| t.name == name)
    }

    fn dispatch(&self, def: &ToolDefinition, args: &Value) -> Result<Value, WotError> {
        let s = |key: &str| args[key].as_str().unwrap_or_default().to_string();
        match def.name.as_str() {
            LIST_WEB_THINGS => {
                let tds = match args["query"].as_str() {
                    Some(q) => self.directory.query(q).map_err(|e| WotError::Domain {
                        code: e.code().to_string(),
                        message: e.to_string(),
                    })?,
                    None => self.directory.list(),
                };
                let include = args["include_td"].as_bool().unwrap_or(false);
                let things: Vec<Value> = tds
                    .into_iter()
                    .map(|td| {
                        let mut v = json!({
                            "id": td.id,
                            "title": td.title,
                            "thing_class": td.thing_class,
                            "type": td.semantic_type,
                            "description": td.description,
                        });
                        if include {
                            v["td"] = td.to_value();
                        }
                        v
                    })
                    .collect();
                Ok(json!({ "things": things }))
            }
            READ_PROPERTY => {
                let (thing, prop) = (s("thing"), s("property"));
                self.require_registered(&thing)?;
                let value = self
                    .servient
                    .invoke_affordance(&thing, AffordanceKind::PropertyRead, &prop, &Value::Null)?;
                Ok(json!({"thing": thing, "property": prop, "value": value}))
            }
            WRITE_PROPERTY => {
                let (thing, prop) = (s("thing"), s("property"));
                self.require_registered(&thing)?;
                let value = self.servient.invoke_affordance(
                    &thing,
                    AffordanceKind::PropertyWrite,
                    &prop,
                    &args["value"],
                )?;
                Ok(json!({"thing": thing, "property": prop, "value": value}))
            }
            CALL_ACTION => {
                let (thing, action) = (s("thing"), s("action"));
                self.require_registered(&thing)?;
                let output =
                    self.servient
                        .invoke_affordance(&thing, AffordanceKind::Action, &action, &args["input"])?;
                Ok(json!({"thing": thing, "action": action, "output": output}))
            }
            PLAN_AREA_COVERAGE | PLAN_DRONE_FORMATION => {
                let service = if def.name == PLAN_AREA_COVERAGE {
                    ServiceKind::CoveragePlanner
                } else {
                    ServiceKind::FormationPlanner
                };
                self.require_registered(service.thing_id())?;
                self.servient
                    .invoke_affordance(service.thing_id(), AffordanceKind::Action, service.action_name(), args)
            }
            other => Err(WotError::Domain {
                code: UNKNOWN_TOOL.to_string(),
                message: format!("{other} is a helper tool and runs inside the agent"),
            }),
        }
    }

    fn require_registered(&self, thing: &str) -> Result<(), WotError> {
        self.directory
            .get(thing)
            .map(|_| ())
            .map_err(|_| WotError::UnknownThing(thing.to_string()))
    }

    fn execute(&self, call: &ToolCall) -> ToolResult {
        let Some(def) = self.definition(&call.tool) else {
            return ToolResult::error(&call.call_id, UNKNOWN_TOOL, format!("no tool named {:?}", call.tool));
        };
        if let Err(v) = def.input_schema.validate(&call.arguments) {
            return ToolResult::error(&call.call_id, SCHEMA_VIOLATION, v.to_string());
        }
        let payload = match self.dispatch(def, &call.arguments) {
            Ok(p) => p,
            Err(WotError::SchemaViolation(v)) => {
                return ToolResult::error(&call.call_id, SCHEMA_VIOLATION, v.to_string())
            }
            Err(e) => return ToolResult::error(&call.call_id, e.code(), e.to_string()),
        };
        if let Err(v) = def.output_schema.validate(&payload) {
            return ToolResult::error(
                &call.call_id,
                "output_schema_violation",
                format!("{} produced an invalid payload: {v}", def.name),
            );
        }
        self.cap(ToolResult::ok(&call.call_id, payload))
    }

    fn cap(&self, mut result: ToolResult) -> ToolResult {
        let text = result.payload.to_string();
        if text.len() > self.config.output_cap_bytes {
            let mut cut = self.config.output_cap_bytes;
            while !text.is_char_boundary(cut) {
                cut -= 1;
            }
            result.payload = json!({
                "truncated": true,
                "original_bytes": text.len(),
                "preview": &text[..cut],
            });
            result.truncated = true;
        }
        result
    }
}

impl ToolGateway for WotGateway {
    fn list_tools(&self) -> Vec<ToolDefinition> {
        self.tools.clone()
    }

    fn call_tool(&self, call: &ToolCall) -> ToolResult {
        let result = self.execute(call);
        let entry = CallLogEntry {
            sim_time_s: self.servient.time_s(),
            call: call.clone(),
            result: result.clone(),
        };
        self.log.lock().unwrap_or_else(|e| e.into_inner()).push(entry);
        result
    }

    fn action_status(&self, thing: &str, action_id: &str) -> Result<ActionStatus, GatewayError> {
        self.servient
            .action_status(thing, action_id)
            .map(ActionStatus::from)
            .map_err(|_| GatewayError::UnknownCall(action_id.to_string()))
    }

    fn pause(&self, seconds: f64) {
        self.servient.advance(seconds);
    }

    fn now(&self) -> f64 {
        self.servient.time_s()
    }
}

impl<G: ToolGateway + ?Sized> ToolGateway for Arc<G> {
    fn list_tools(&self) -> Vec<ToolDefinition> {
        (**self).list_tools()
    }

    fn call_tool(&self, call: &ToolCall) -> ToolResult {
        (**self).call_tool(call)
    }

    fn action_status(&self, thing: &str, action_id: &str) -> Result<ActionStatus, GatewayError> {
        (**self).action_status(thing, action_id)
    }

    fn pause(&self, seconds: f64) {
        (**self).pause(seconds)
    }

    fn now(&self) -> f64 {
        (**self).now()
    }
}
