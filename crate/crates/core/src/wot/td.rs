//! Thing Descriptions: a JSON subset of the W3C WoT TD 1.1 vocabulary.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::schema::{
    point2_schema, region_schema, slot_schema, vec3_schema, AffordanceSchema, FieldSchema,
    SchemaViolation,
};
use crate::sim::{DeviceKind, GroundDevice};

pub const TD_CONTEXT: &str = "https://www.w3.org/2022/wot/td/v1.1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThingClass {
    Physical,
    Virtual,
    Service,
}

/// A property is its value schema plus the `readOnly` flag; the human
/// description lives on the schema.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyAffordance {
    pub read_only: bool,
    pub schema: FieldSchema,
}

impl Serialize for PropertyAffordance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut v = self.schema.to_json();
        if let Value::Object(m) = &mut v {
            m.insert("readOnly".into(), Value::Bool(self.read_only));
        }
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PropertyAffordance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut v = Value::deserialize(d)?;
        let read_only = match v.as_object_mut().and_then(|m| m.remove("readOnly")) {
            None => false,
            Some(Value::Bool(b)) => b,
            Some(_) => return Err(serde::de::Error::custom("readOnly must be a boolean")),
        };
        let schema = FieldSchema::from_json(&v, true).map_err(serde::de::Error::custom)?;
        Ok(Self { read_only, schema })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionAffordance {
    pub description: String,
    pub input: AffordanceSchema,
    pub output: AffordanceSchema,
    #[serde(default)]
    pub safe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventAffordance {
    pub description: String,
    pub data: FieldSchema,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormOp {
    Readproperty,
    Writeproperty,
    Invokeaction,
    Queryaction,
    Subscribeevent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Form {
    pub href: String,
    pub op: FormOp,
    pub affordance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThingDescription {
    #[serde(rename = "@context")]
    pub context: String,
    pub id: String,
    pub title: String,
    #[serde(rename = "@type")]
    pub semantic_type: String,
    pub thing_class: ThingClass,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub properties: BTreeMap<String, PropertyAffordance>,
    #[serde(default)]
    pub actions: BTreeMap<String, ActionAffordance>,
    #[serde(default)]
    pub events: BTreeMap<String, EventAffordance>,
    #[serde(default)]
    pub forms: Vec<Form>,
}

#[derive(Debug, thiserror::Error)]
pub enum TdError {
    #[error("malformed TD JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("TD id must be non-empty")]
    EmptyId,
    #[error("form {href} references missing affordance {affordance}")]
    DanglingForm { href: String, affordance: String },
    #[error("ill-formed schema at {0}")]
    Schema(SchemaViolation),
}

impl ThingDescription {
    fn new(id: &str, title: &str, semantic_type: &str, class: ThingClass, description: &str) -> Self {
        Self {
            context: TD_CONTEXT.to_string(),
            id: id.to_string(),
            title: title.to_string(),
            semantic_type: semantic_type.to_string(),
            thing_class: class,
            description: description.to_string(),
            properties: BTreeMap::new(),
            actions: BTreeMap::new(),
            events: BTreeMap::new(),
            forms: Vec::new(),
        }
    }

    fn property(mut self, name: &str, description: &str, schema: FieldSchema) -> Self {
        self.properties.insert(
            name.to_string(),
            PropertyAffordance {
                read_only: true,
                schema: schema.describe(description),
            },
        );
        self
    }

    fn writable(mut self, name: &str, description: &str, schema: FieldSchema) -> Self {
        self.properties.insert(
            name.to_string(),
            PropertyAffordance {
                read_only: false,
                schema: schema.describe(description),
            },
        );
        self
    }

    fn action(mut self, name: &str, description: &str, input: AffordanceSchema, output: AffordanceSchema) -> Self {
        self.actions.insert(
            name.to_string(),
            ActionAffordance {
                description: description.to_string(),
                input,
                output,
                safe: false,
            },
        );
        self
    }

    fn safe_action(mut self, name: &str, description: &str, input: AffordanceSchema, output: AffordanceSchema) -> Self {
        self = self.action(name, description, input, output);
        self.actions.get_mut(name).unwrap().safe = true;
        self
    }

    /// Regenerates HTTP forms for every declared affordance.
    fn with_forms(mut self) -> Self {
        let base = format!("/things/{}", self.id);
        let mut forms = Vec::new();
        for (name, p) in &self.properties {
            let href = format!("{base}/properties/{name}");
            forms.push(Form {
                href: href.clone(),
                op: FormOp::Readproperty,
                affordance: name.clone(),
            });
            if !p.read_only {
                forms.push(Form {
                    href,
                    op: FormOp::Writeproperty,
                    affordance: name.clone(),
                });
            }
        }
        for name in self.actions.keys() {
            forms.push(Form {
                href: format!("{base}/actions/{name}"),
                op: FormOp::Invokeaction,
                affordance: name.clone(),
            });
        }
        for name in self.events.keys() {
            forms.push(Form {
                href: format!("{base}/events/{name}"),
                op: FormOp::Subscribeevent,
                affordance: name.clone(),
            });
        }
        self.forms = forms;
        self
    }

    pub fn validate(&self) -> Result<(), TdError> {
        if self.id.is_empty() {
            return Err(TdError::EmptyId);
        }
        for f in &self.forms {
            let exists = match f.op {
                FormOp::Readproperty | FormOp::Writeproperty => self.properties.contains_key(&f.affordance),
                FormOp::Invokeaction | FormOp::Queryaction => self.actions.contains_key(&f.affordance),
                FormOp::Subscribeevent => self.events.contains_key(&f.affordance),
            };
            if !exists {
                return Err(TdError::DanglingForm {
                    href: f.href.clone(),
                    affordance: f.affordance.clone(),
                });
            }
        }
        for (name, p) in &self.properties {
            p.schema
                .check_well_formed(&format!("properties.{name}"))
                .map_err(TdError::Schema)?;
        }
        for (name, a) in &self.actions {
            for (which, s) in [("input", &a.input), ("output", &a.output)] {
                s.check_well_formed().map_err(|mut e| {
                    e.field = format!("actions.{name}.{which}.{}", e.field);
                    TdError::Schema(e)
                })?;
            }
        }
        for (name, e) in &self.events {
            e.data
                .check_well_formed(&format!("events.{name}"))
                .map_err(TdError::Schema)?;
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("TD serialization is infallible")
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("TD serialization is infallible")
    }

    pub fn from_json_str(s: &str) -> Result<Self, TdError> {
        let td: ThingDescription = serde_json::from_str(s)?;
        td.validate()?;
        Ok(td)
    }

    pub fn from_value(v: Value) -> Result<Self, TdError> {
        let td: ThingDescription = serde_json::from_value(v)?;
        td.validate()?;
        Ok(td)
    }
}

fn ack_output() -> AffordanceSchema {
    AffordanceSchema::new()
        .field("action_id", FieldSchema::string())
        .field("state", FieldSchema::string())
        .field("status_href", FieldSchema::string())
}

/// Entry of the `action_status` property.
pub fn action_status_entry_schema() -> FieldSchema {
    FieldSchema::object(
        AffordanceSchema::new()
            .field("action_id", FieldSchema::string())
            .field("action", FieldSchema::string())
            .field("state", FieldSchema::string())
            .field("detail", FieldSchema::string()),
    )
}

pub fn uav_td(drone_id: &str, sysid: u8) -> ThingDescription {
    let empty = AffordanceSchema::new;
    ThingDescription::new(
        drone_id,
        &format!("Multirotor UAV {drone_id} (SYSID {sysid})"),
        "uav",
        ThingClass::Physical,
        "Multirotor drone. Actions return an acknowledgement; verify completion through property reads.",
    )
    .property("position", "Local ENU position in meters (z is altitude above ground).", vec3_schema())
    .property("home", "Launch position in meters.", vec3_schema())
    .property("mode", "Flight mode: GUIDED, LAND, RTL or STABILIZE.", FieldSchema::string())
    .property("armed", "Motor-enable state.", FieldSchema::boolean())
    .property("airborne", "True while the drone is off the ground.", FieldSchema::boolean())
    .property("battery", "Remaining battery charge in mAh.", FieldSchema::number().min(0.0))
    .property("sysid", "Autopilot system id.", FieldSchema::integer().min(1.0).max(255.0))
    .property(
        "action_status",
        "Most recent actions on this drone with their state (accepted, running, completed, failed).",
        FieldSchema::array(action_status_entry_schema()),
    )
    .writable(
        "param.cruise_speed",
        "Horizontal cruise speed in m/s.",
        FieldSchema::number().exclusive_min(0.0),
    )
    .action("arm", "Enable motors (on the ground).", empty(), ack_output())
    .action("disarm", "Disable motors; only legal on the ground.", empty(), ack_output())
    .action(
        "takeoff",
        "Switch to GUIDED and climb vertically to `alt` meters. Requires armed.",
        AffordanceSchema::new().field(
            "alt",
            FieldSchema::number().exclusive_min(0.0).describe("target altitude in meters"),
        ),
        ack_output(),
    )
    .action(
        "goto",
        "Fly to (x, y) at altitude `alt`. Requires airborne and GUIDED.",
        AffordanceSchema::new()
            .field("x", FieldSchema::number())
            .field("y", FieldSchema::number())
            .field("alt", FieldSchema::number().exclusive_min(0.0)),
        ack_output(),
    )
    .action("land", "Descend in place and disarm on touchdown.", empty(), ack_output())
    .action("rtl", "Return to launch at current altitude, then land and disarm.", empty(), ack_output())
    .action(
        "set_mode",
        "Set the flight mode directly.",
        AffordanceSchema::new().field("mode", FieldSchema::string()),
        ack_output(),
    )
    .with_forms()
}

pub fn sensor_td(device: &GroundDevice) -> ThingDescription {
    let (title, unit) = match device.kind {
        DeviceKind::HumiditySensor => ("Soil humidity sensor", "%"),
        _ => ("Air temperature sensor", "degC"),
    };
    ThingDescription::new(
        &device.id,
        &format!("{title} {}", device.id),
        device.kind.as_str(),
        ThingClass::Physical,
        &format!(
            "Ground sensor reporting in {unit}. A drone must be within comm_range (horizontal) to sample it."
        ),
    )
    .property("position", "Sensor position in meters.", vec3_schema())
    .property("comm_range", "Communication range in meters.", FieldSchema::number().exclusive_min(0.0))
    .property("kind", "Device kind.", FieldSchema::string())
    .action(
        "sample",
        "Read a measurement relayed through the requesting drone.",
        AffordanceSchema::new().field("requester_id", FieldSchema::string()),
        AffordanceSchema::new()
            .field("device", FieldSchema::string())
            .field("requester", FieldSchema::string())
            .field("value", FieldSchema::number())
            .field("unit", FieldSchema::string()),
    )
    .with_forms()
}

pub fn actuator_td(device: &GroundDevice) -> ThingDescription {
    ThingDescription::new(
        &device.id,
        &format!("Irrigation actuator {}", device.id),
        device.kind.as_str(),
        ThingClass::Physical,
        "Ground irrigation valve.",
    )
    .property("position", "Actuator position in meters.", vec3_schema())
    .property("comm_range", "Communication range in meters.", FieldSchema::number().exclusive_min(0.0))
    .property("kind", "Device kind.", FieldSchema::string())
    .property("triggered", "Whether irrigation has been started.", FieldSchema::boolean())
    .action(
        "trigger",
        "Start irrigation.",
        AffordanceSchema::new(),
        AffordanceSchema::new().field("triggered", FieldSchema::boolean()),
    )
    .with_forms()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceKind {
    CoveragePlanner,
    FormationPlanner,
}

impl ServiceKind {
    pub fn thing_id(self) -> &'static str {
        match self {
            Self::CoveragePlanner => "coverage-planner",
            Self::FormationPlanner => "formation-planner",
        }
    }

    pub fn action_name(self) -> &'static str {
        match self {
            Self::CoveragePlanner => "plan_area_coverage",
            Self::FormationPlanner => "plan_drone_formation",
        }
    }
}

pub fn coverage_plan_input() -> AffordanceSchema {
    AffordanceSchema::new()
        .field("region", region_schema().describe("rectangle to cover"))
        .field("n", FieldSchema::integer().min(1.0).max(1000.0).describe("number of drones"))
        .field("fov_deg", FieldSchema::number().describe("camera full field of view in degrees"))
        .field("alt_min", FieldSchema::number().describe("minimum altitude in meters"))
        .field("alt_max", FieldSchema::number().describe("maximum altitude in meters"))
}

pub fn coverage_plan_output() -> AffordanceSchema {
    AffordanceSchema::new()
        .field("rows", FieldSchema::integer())
        .field("cols", FieldSchema::integer())
        .field("cell_w", FieldSchema::number())
        .field("cell_h", FieldSchema::number())
        .field("r_cell", FieldSchema::number())
        .field("altitude", FieldSchema::number())
        .field("clamped", FieldSchema::boolean())
        .field("slots", FieldSchema::array(slot_schema()))
}

pub fn formation_plan_input() -> AffordanceSchema {
    AffordanceSchema::new()
        .field("shape", FieldSchema::string().describe("line, star or circle"))
        .field("center", point2_schema())
        .field("orientation_deg", FieldSchema::number().optional())
        .field("spacing", FieldSchema::number().describe("minimum inter-drone spacing in meters"))
        .field("n", FieldSchema::integer().min(1.0).max(64.0))
        .field("altitude", FieldSchema::number())
        .field(
            "drones",
            FieldSchema::array(FieldSchema::object(
                AffordanceSchema::new()
                    .field("id", FieldSchema::string())
                    .field("x", FieldSchema::number())
                    .field("y", FieldSchema::number())
                    .field("z", FieldSchema::number().optional()),
            ))
            .optional()
            .describe("current drone positions; when given, each drone is assigned a slot"),
        )
        .field(
            "objective",
            FieldSchema::string()
                .optional()
                .describe("maximize or minimize total displacement (default maximize)"),
        )
}

pub fn formation_plan_output() -> AffordanceSchema {
    AffordanceSchema::new()
        .field("shape", FieldSchema::string())
        .field("center", point2_schema())
        .field("orientation_deg", FieldSchema::number())
        .field("spacing", FieldSchema::number())
        .field("slots", FieldSchema::array(slot_schema()))
        .field(
            "assignment",
            FieldSchema::array(FieldSchema::object(
                AffordanceSchema::new()
                    .field("drone", FieldSchema::string())
                    .field("slot", FieldSchema::integer())
                    .field("x", FieldSchema::number())
                    .field("y", FieldSchema::number())
                    .field("alt", FieldSchema::number()),
            ))
            .optional(),
        )
        .field("total_displacement", FieldSchema::number().optional())
}

pub fn service_td(service: ServiceKind) -> ThingDescription {
    let td = match service {
        ServiceKind::CoveragePlanner => ThingDescription::new(
            service.thing_id(),
            "Area coverage planner",
            "planner",
            ThingClass::Service,
            "Near-square grid coverage with altitude from camera footprint.",
        )
        .safe_action(
            service.action_name(),
            "One cell-centre slot per drone, altitude chosen so the footprint covers the cell.",
            coverage_plan_input(),
            coverage_plan_output(),
        ),
        ServiceKind::FormationPlanner => ThingDescription::new(
            service.thing_id(),
            "Formation planner",
            "planner",
            ThingClass::Service,
            "Geometric formation slots and drone-to-slot assignment.",
        )
        .safe_action(
            service.action_name(),
            "Slots for a line, star or circle formation; optional assignment of drones to slots.",
            formation_plan_input(),
            formation_plan_output(),
        ),
    };
    td.with_forms()
}

/// Mission metadata exposed as a virtual Thing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionBrief {
    pub id: String,
    pub region: crate::geometry::Region,
    pub alt_min: f64,
    pub alt_max: f64,
    pub camera_fov_deg: f64,
    /// Mission-specific parameters (formation, irrigation rule, ...).
    #[serde(default)]
    pub extra: BTreeMap<String, Value>,
}

pub fn mission_td(brief: &MissionBrief) -> ThingDescription {
    let mut td = ThingDescription::new(
        &brief.id,
        "Mission area",
        "mission_area",
        ThingClass::Virtual,
        "Mission geometry and constraints.",
    )
    .property("region", "Target rectangle in local meters.", region_schema())
    .property(
        "altitude_bounds",
        "Allowed flight altitudes in meters.",
        FieldSchema::object(
            AffordanceSchema::new()
                .field("min", FieldSchema::number())
                .field("max", FieldSchema::number()),
        ),
    )
    .property(
        "camera_fov_deg",
        "Downward camera full field of view in degrees.",
        FieldSchema::number(),
    );
    for key in brief.extra.keys() {
        td = td.property(key, "Mission parameter.", FieldSchema::any());
    }
    td.with_forms()
}
