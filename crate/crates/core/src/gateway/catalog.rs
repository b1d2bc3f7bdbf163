use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::wot::{
    coverage_plan_input, coverage_plan_output, formation_plan_input, formation_plan_output,
    AffordanceSchema, FieldSchema,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolCategory {
    Core,
    Planning,
    Helper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDefinition {
    pub name: String,
    pub description: String,
    pub input_schema: AffordanceSchema,
    pub output_schema: AffordanceSchema,
    pub category: ToolCategory,
}

impl ToolDefinition {
    fn new(
        name: &str,
        category: ToolCategory,
        description: &str,
        input_schema: AffordanceSchema,
        output_schema: AffordanceSchema,
    ) -> Self {
        Self {
            name: name.to_string(),
            description: description.to_string(),
            input_schema,
            output_schema,
            category,
        }
    }

    /// MCP `tools/list` entry.
    pub fn to_mcp(&self) -> Value {
        json!({
            "name": self.name,
            "description": self.description,
            "inputSchema": self.input_schema.to_json(),
            "outputSchema": self.output_schema.to_json(),
        })
    }
}

pub const LIST_WEB_THINGS: &str = "list_web_things";
pub const READ_PROPERTY: &str = "read_web_thing_property";
pub const WRITE_PROPERTY: &str = "write_web_thing_property";
pub const CALL_ACTION: &str = "call_web_thing_action";
pub const PLAN_AREA_COVERAGE: &str = "plan_area_coverage";
pub const PLAN_DRONE_FORMATION: &str = "plan_drone_formation";
pub const SEND_DRONES: &str = "send_drones_to_positions";
pub const WAIT_ARMED: &str = "wait_until_armed";
pub const WAIT_ARRIVED: &str = "wait_until_arrived";
pub const WAIT_LANDED: &str = "wait_until_landed";

pub fn core_tools() -> Vec<ToolDefinition> {
    let thing_summary = FieldSchema::object(
        AffordanceSchema::new()
            .field("id", FieldSchema::string())
            .field("title", FieldSchema::string())
            .field("thing_class", FieldSchema::string())
            .field("type", FieldSchema::string())
            .field("description", FieldSchema::string())
            .field("td", FieldSchema::open_object().optional()),
    );
    vec![
        ToolDefinition::new(
            LIST_WEB_THINGS,
            ToolCategory::Core,
            "Discover WoT Things registered in the Thing Description Directory. Optional `query` is a path expression over each TD (e.g. \"$[?(@.thing_class=='service')]\"); set include_td to get full descriptions.",
            AffordanceSchema::new()
                .field("query", FieldSchema::string().optional())
                .field("include_td", FieldSchema::boolean().optional()),
            AffordanceSchema::new().field("things", FieldSchema::array(thing_summary)),
        ),
        ToolDefinition::new(
            READ_PROPERTY,
            ToolCategory::Core,
            "Read telemetry and state properties of a Thing (e.g. position, mode, armed, battery, airborne, action_status).",
            AffordanceSchema::new()
                .field("thing", FieldSchema::string())
                .field("property", FieldSchema::string()),
            AffordanceSchema::new()
                .field("thing", FieldSchema::string())
                .field("property", FieldSchema::string())
                .field("value", FieldSchema::any()),
        ),
        ToolDefinition::new(
            WRITE_PROPERTY,
            ToolCategory::Core,
            "Write a writable property of a Thing (drones expose param.cruise_speed).",
            AffordanceSchema::new()
                .field("thing", FieldSchema::string())
                .field("property", FieldSchema::string())
                .field("value", FieldSchema::any()),
            AffordanceSchema::new()
                .field("thing", FieldSchema::string())
                .field("property", FieldSchema::string())
                .field("value", FieldSchema::any()),
        ),
        ToolDefinition::new(
            CALL_ACTION,
            ToolCategory::Core,
            "Invoke an action of a Thing. Drone actions return an acknowledgement (action_id, state); completion must be verified through later property reads.",
            AffordanceSchema::new()
                .field("thing", FieldSchema::string())
                .field("action", FieldSchema::string())
                .field("input", FieldSchema::open_object().optional()),
            AffordanceSchema::new()
                .field("thing", FieldSchema::string())
                .field("action", FieldSchema::string())
                .field("output", FieldSchema::any()),
        ),
    ]
}

pub fn coverage_tool() -> ToolDefinition {
    ToolDefinition::new(
        PLAN_AREA_COVERAGE,
        ToolCategory::Planning,
        "Generate spatial coverage targets and altitude suggestions for a rectangular region: one cell-centre slot per drone on a near-square grid.",
        coverage_plan_input(),
        coverage_plan_output(),
    )
}

pub fn formation_tool() -> ToolDefinition {
    ToolDefinition::new(
        PLAN_DRONE_FORMATION,
        ToolCategory::Planning,
        "Compute target positions for geometric formations (line, star, circle); pass current drone positions to receive a drone-to-slot assignment.",
        formation_plan_input(),
        formation_plan_output(),
    )
}

pub fn helper_tools() -> Vec<ToolDefinition> {
    let wait_input = || {
        AffordanceSchema::new()
            .field("drones", FieldSchema::array(FieldSchema::string()))
            .field("timeout_s", FieldSchema::number().min(0.0).max(3600.0))
    };
    let wait_output = || {
        AffordanceSchema::new()
            .field("satisfied", FieldSchema::boolean())
            .field("elapsed_s", FieldSchema::number())
            .field(
                "per_drone",
                FieldSchema::array(FieldSchema::object(
                    AffordanceSchema::new()
                        .field("drone", FieldSchema::string())
                        .field("satisfied", FieldSchema::boolean())
                        .field("detail", FieldSchema::string()),
                )),
            )
    };
    vec![
        ToolDefinition::new(
            SEND_DRONES,
            ToolCategory::Helper,
            "Dispatch multiple goto commands in a single call. Failures are reported per drone.",
            AffordanceSchema::new().field(
                "targets",
                FieldSchema::array(FieldSchema::object(
                    AffordanceSchema::new()
                        .field("drone", FieldSchema::string())
                        .field("x", FieldSchema::number())
                        .field("y", FieldSchema::number())
                        .field("alt", FieldSchema::number()),
                )),
            ),
            AffordanceSchema::new().field(
                "results",
                FieldSchema::array(FieldSchema::object(
                    AffordanceSchema::new()
                        .field("drone", FieldSchema::string())
                        .field("status", FieldSchema::string())
                        .field("action_id", FieldSchema::string().optional())
                        .field("error_code", FieldSchema::string().optional())
                        .field("error_detail", FieldSchema::string().optional()),
                )),
            ),
        ),
        ToolDefinition::new(
            WAIT_ARMED,
            ToolCategory::Helper,
            "Wait until every listed drone reports armed=true, or until the timeout.",
            wait_input(),
            wait_output(),
        ),
        ToolDefinition::new(
            WAIT_ARRIVED,
            ToolCategory::Helper,
            "Wait until the latest takeoff/goto of every listed drone has completed (within arrival tolerance), or until the timeout.",
            wait_input(),
            wait_output(),
        ),
        ToolDefinition::new(
            WAIT_LANDED,
            ToolCategory::Helper,
            "Wait until every listed drone is on the ground and disarmed, or until the timeout.",
            wait_input(),
            wait_output(),
        ),
    ]
}
