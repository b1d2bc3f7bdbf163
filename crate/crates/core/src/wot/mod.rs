//! Web-of-Things layer: Thing Descriptions, affordance schemas and the
//! servient that dispatches invocations to the simulator and planners.

mod schema;
mod servient;
mod status;
mod td;

pub use schema::{
    point2_schema, region_schema, slot_schema, vec3_schema, AffordanceSchema, FieldSchema,
    SchemaViolation, ValueType,
};
pub use servient::{AffordanceKind, Servient, ServientConfig};
pub use status::{ActionRecord, ActionState, ActionTracker, Completion, STATUS_HISTORY};
pub use td::{
    action_status_entry_schema, actuator_td, coverage_plan_input, coverage_plan_output,
    formation_plan_input, formation_plan_output, mission_td, sensor_td, service_td, uav_td,
    ActionAffordance, EventAffordance, Form, FormOp, MissionBrief, PropertyAffordance,
    ServiceKind, TdError, ThingClass, ThingDescription, TD_CONTEXT,
};

use thiserror::Error;

use crate::planners::PlanError;
use crate::sim::SimError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WotError {
    #[error("unknown thing {0}")]
    UnknownThing(String),
    #[error("thing {thing} has no affordance {name}")]
    UnknownAffordance { thing: String, name: String },
    #[error("schema violation at {0}")]
    SchemaViolation(SchemaViolation),
    #[error("property {name} of {thing} is read-only")]
    ReadOnlyProperty { thing: String, name: String },
    #[error("{message}")]
    Domain { code: String, message: String },
    #[error("output of {thing}.{name} broke its schema: {violation}")]
    OutputSchemaViolation {
        thing: String,
        name: String,
        violation: String,
    },
    #[error("unknown action id {0}")]
    UnknownAction(String),
}

impl WotError {
    pub fn code(&self) -> &str {
        match self {
            Self::UnknownThing(_) => "unknown_thing",
            Self::UnknownAffordance { .. } => "unknown_affordance",
            Self::SchemaViolation(_) => "schema_violation",
            Self::ReadOnlyProperty { .. } => "read_only_property",
            Self::Domain { code, .. } => code,
            Self::OutputSchemaViolation { .. } => "output_schema_violation",
            Self::UnknownAction(_) => "unknown_call",
        }
    }
}

impl From<SimError> for WotError {
    fn from(e: SimError) -> Self {
        Self::Domain {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

impl From<PlanError> for WotError {
    fn from(e: PlanError) -> Self {
        Self::Domain {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}
