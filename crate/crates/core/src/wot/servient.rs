use std::collections::BTreeMap;
use std::sync::{Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::schema::FieldSchema;
use super::status::{ActionRecord, ActionTracker, Completion, STATUS_HISTORY};
use super::td::{
    actuator_td, mission_td, sensor_td, service_td, uav_td, MissionBrief, ServiceKind,
    ThingDescription,
};
use super::WotError;
use crate::geometry::{Point2, Region, Vec3};
use crate::planners::{
    assign_slots, plan_area_coverage, plan_drone_formation, CameraModel, FormationShape, Objective,
    PlanError,
};
use crate::sim::{DeviceKind, FlightMode, World, WorldSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AffordanceKind {
    Action,
    PropertyRead,
    PropertyWrite,
}

#[derive(Debug, Clone, Default)]
pub struct ServientConfig {
    pub services: Vec<ServiceKind>,
    pub mission: Option<MissionBrief>,
}

#[derive(Debug, Clone)]
enum Hosted {
    Uav,
    Device(DeviceKind),
    Service(ServiceKind),
    Mission(MissionBrief),
}

struct State {
    world: World,
    tracker: ActionTracker,
}

/// In-process host for every Thing of one world. All world access is
/// serialized through a single lock; TDs are immutable once built.
pub struct Servient {
    state: Mutex<State>,
    tds: BTreeMap<String, ThingDescription>,
    hosted: BTreeMap<String, Hosted>,
}

impl Servient {
    pub fn new(world: World, config: ServientConfig) -> Self {
        let mut tds = BTreeMap::new();
        let mut hosted = BTreeMap::new();
        for d in world.drones() {
            tds.insert(d.id.clone(), uav_td(&d.id, d.sysid));
            hosted.insert(d.id.clone(), Hosted::Uav);
        }
        for dev in world.devices() {
            let td = if dev.kind.is_sensor() {
                sensor_td(dev)
            } else {
                actuator_td(dev)
            };
            tds.insert(dev.id.clone(), td);
            hosted.insert(dev.id.clone(), Hosted::Device(dev.kind));
        }
        for s in config.services {
            tds.insert(s.thing_id().to_string(), service_td(s));
            hosted.insert(s.thing_id().to_string(), Hosted::Service(s));
        }
        if let Some(brief) = config.mission {
            tds.insert(brief.id.clone(), mission_td(&brief));
            hosted.insert(brief.id.clone(), Hosted::Mission(brief));
        }
        Self {
            state: Mutex::new(State {
                world,
                tracker: ActionTracker::new(),
            }),
            tds,
            hosted,
        }
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn thing_descriptions(&self) -> impl Iterator<Item = &ThingDescription> {
        self.tds.values()
    }

    pub fn thing_description(&self, id: &str) -> Result<&ThingDescription, WotError> {
        self.tds.get(id).ok_or_else(|| WotError::UnknownThing(id.to_string()))
    }

    pub fn with_world<R>(&self, f: impl FnOnce(&World) -> R) -> R {
        f(&self.lock().world)
    }

    pub fn with_world_mut<R>(&self, f: impl FnOnce(&mut World) -> R) -> R {
        f(&mut self.lock().world)
    }

    pub fn snapshot(&self) -> WorldSnapshot {
        self.lock().world.snapshot()
    }

    pub fn time_s(&self) -> f64 {
        self.lock().world.time_s()
    }

    /// Runs the world forward, refreshing action states after every tick.
    pub fn advance(&self, seconds: f64) {
        let mut st = self.lock();
        let dt = st.world.config().tick_dt;
        let ticks = (seconds.max(0.0) / dt).round() as u64;
        for _ in 0..ticks {
            st.world.step();
            let State { world, tracker } = &mut *st;
            tracker.update(world);
        }
    }

    pub fn action_status(&self, thing: &str, action_id: &str) -> Result<ActionRecord, WotError> {
        let st = self.lock();
        match st.tracker.get(action_id) {
            Some(r) if r.thing == thing => Ok(r.clone()),
            _ => Err(WotError::UnknownAction(action_id.to_string())),
        }
    }

    /// Validates `input`, dispatches, and checks the output against the
    /// declared schema.
    pub fn invoke_affordance(
        &self,
        thing: &str,
        kind: AffordanceKind,
        name: &str,
        input: &Value,
    ) -> Result<Value, WotError> {
        let td = self.thing_description(thing)?;
        let hosted = &self.hosted[thing];
        let unknown = || WotError::UnknownAffordance {
            thing: thing.to_string(),
            name: name.to_string(),
        };
        match kind {
            AffordanceKind::PropertyRead => {
                let prop = td.properties.get(name).ok_or_else(unknown)?;
                let value = self.read_property(thing, hosted, name)?;
                check_output(&prop.schema, &value, thing, name)?;
                Ok(value)
            }
            AffordanceKind::PropertyWrite => {
                let prop = td.properties.get(name).ok_or_else(unknown)?;
                if prop.read_only {
                    return Err(WotError::ReadOnlyProperty {
                        thing: thing.to_string(),
                        name: name.to_string(),
                    });
                }
                prop.schema.validate(input, "value").map_err(WotError::SchemaViolation)?;
                self.write_property(thing, name, input)
            }
            AffordanceKind::Action => {
                let action = td.actions.get(name).ok_or_else(unknown)?;
                action.input.validate(input).map_err(WotError::SchemaViolation)?;
                let out = self.run_action(thing, hosted, name, input)?;
                action.output.validate(&out).map_err(|v| WotError::OutputSchemaViolation {
                    thing: thing.to_string(),
                    name: name.to_string(),
                    violation: v.to_string(),
                })?;
                Ok(out)
            }
        }
    }

    fn read_property(&self, thing: &str, hosted: &Hosted, name: &str) -> Result<Value, WotError> {
        let st = self.lock();
        let w = &st.world;
        let value = match hosted {
            Hosted::Uav => {
                let d = w.drone(thing)?;
                match name {
                    "position" => json!(d.position),
                    "home" => json!(d.home),
                    "mode" => json!(d.mode.as_str()),
                    "armed" => json!(d.armed),
                    "airborne" => json!(d.airborne),
                    "battery" => json!(d.battery_mah),
                    "sysid" => json!(d.sysid),
                    "param.cruise_speed" => json!(d.cruise_speed),
                    "action_status" => Value::Array(
                        st.tracker
                            .recent(thing, STATUS_HISTORY)
                            .into_iter()
                            .map(|r| {
                                json!({
                                    "action_id": r.action_id,
                                    "action": r.action,
                                    "state": r.state.as_str(),
                                    "detail": r.detail,
                                })
                            })
                            .collect(),
                    ),
                    _ => return Err(unknown_property(thing, name)),
                }
            }
            Hosted::Device(_) => {
                let dev = w.device(thing)?;
                match name {
                    "position" => json!(dev.position),
                    "comm_range" => json!(dev.comm_range_m),
                    "kind" => json!(dev.kind.as_str()),
                    "triggered" => json!(dev.triggered),
                    _ => return Err(unknown_property(thing, name)),
                }
            }
            Hosted::Mission(brief) => match name {
                "region" => json!(brief.region),
                "altitude_bounds" => json!({"min": brief.alt_min, "max": brief.alt_max}),
                "camera_fov_deg" => json!(brief.camera_fov_deg),
                other => brief
                    .extra
                    .get(other)
                    .cloned()
                    .ok_or_else(|| unknown_property(thing, name))?,
            },
            Hosted::Service(_) => return Err(unknown_property(thing, name)),
        };
        Ok(value)
    }

    fn write_property(&self, thing: &str, name: &str, value: &Value) -> Result<Value, WotError> {
        match name {
            "param.cruise_speed" => {
                let speed = value.as_f64().unwrap_or(f64::NAN);
                self.lock().world.set_cruise_speed(thing, speed)?;
                Ok(json!(speed))
            }
            _ => Err(WotError::ReadOnlyProperty {
                thing: thing.to_string(),
                name: name.to_string(),
            }),
        }
    }

    fn run_action(&self, thing: &str, hosted: &Hosted, name: &str, input: &Value) -> Result<Value, WotError> {
        match hosted {
            Hosted::Uav => self.uav_action(thing, name, input),
            Hosted::Device(kind) => {
                let mut st = self.lock();
                match (kind, name) {
                    (DeviceKind::IrrigationActuator, "trigger") => {
                        st.world.trigger_irrigation(thing)?;
                        Ok(json!({"triggered": true}))
                    }
                    (DeviceKind::HumiditySensor | DeviceKind::TemperatureSensor, "sample") => {
                        let requester = input["requester_id"].as_str().unwrap_or_default();
                        let value = st.world.sample_sensor(thing, requester)?;
                        let unit = if *kind == DeviceKind::HumiditySensor { "%" } else { "degC" };
                        Ok(json!({
                            "device": thing,
                            "requester": requester,
                            "value": value,
                            "unit": unit,
                        }))
                    }
                    _ => Err(unknown_action(thing, name)),
                }
            }
            Hosted::Service(ServiceKind::CoveragePlanner) => run_coverage_planner(input),
            Hosted::Service(ServiceKind::FormationPlanner) => run_formation_planner(input),
            Hosted::Mission(_) => Err(unknown_action(thing, name)),
        }
    }

    fn uav_action(&self, id: &str, name: &str, input: &Value) -> Result<Value, WotError> {
        let mut st = self.lock();
        let f = |key: &str| input[key].as_f64().unwrap_or(f64::NAN);
        let completion = match name {
            "arm" => {
                st.world.cmd_arm(id)?;
                Completion::Immediate
            }
            "disarm" => {
                st.world.cmd_disarm(id)?;
                Completion::Immediate
            }
            "takeoff" => {
                st.world.cmd_takeoff(id, f("alt"))?;
                Completion::Reach {
                    target: st.world.drone(id)?.target.expect("takeoff sets a target"),
                }
            }
            "goto" => {
                st.world.cmd_goto(id, f("x"), f("y"), f("alt"))?;
                Completion::Reach {
                    target: Vec3::new(f("x"), f("y"), f("alt")),
                }
            }
            "land" => {
                st.world.cmd_land(id)?;
                Completion::Grounded
            }
            "rtl" => {
                st.world.cmd_rtl(id)?;
                Completion::Grounded
            }
            "set_mode" => {
                let mode = input["mode"].as_str().unwrap_or_default();
                st.world.set_mode(id, mode)?;
                let d = st.world.drone(id)?;
                match d.mode {
                    FlightMode::Land | FlightMode::Rtl if d.airborne => Completion::Grounded,
                    _ => Completion::Immediate,
                }
            }
            _ => return Err(unknown_action(id, name)),
        };
        let tick = st.world.tick();
        let rec = st.tracker.issue(id, name, completion, tick);
        Ok(json!({
            "action_id": rec.action_id,
            "state": rec.state.as_str(),
            "status_href": rec.status_href(),
        }))
    }
}

fn unknown_property(thing: &str, name: &str) -> WotError {
    WotError::UnknownAffordance {
        thing: thing.to_string(),
        name: name.to_string(),
    }
}

fn unknown_action(thing: &str, name: &str) -> WotError {
    unknown_property(thing, name)
}

fn check_output(schema: &FieldSchema, value: &Value, thing: &str, name: &str) -> Result<(), WotError> {
    schema.validate(value, name).map_err(|v| WotError::OutputSchemaViolation {
        thing: thing.to_string(),
        name: name.to_string(),
        violation: v.to_string(),
    })
}

fn parse<T: serde::de::DeserializeOwned>(v: &Value, field: &str) -> Result<T, WotError> {
    serde_json::from_value(v.clone()).map_err(|e| {
        WotError::SchemaViolation(super::schema::SchemaViolation {
            field: field.to_string(),
            reason: e.to_string(),
        })
    })
}

fn run_coverage_planner(input: &Value) -> Result<Value, WotError> {
    let region: Region = parse(&input["region"], "region")?;
    let n = input["n"].as_u64().unwrap_or(0) as usize;
    let camera = CameraModel::from_degrees(input["fov_deg"].as_f64().unwrap_or(f64::NAN))?;
    let plan = plan_area_coverage(
        &region,
        n,
        camera,
        input["alt_min"].as_f64().unwrap_or(f64::NAN),
        input["alt_max"].as_f64().unwrap_or(f64::NAN),
    )?;
    Ok(serde_json::to_value(plan).expect("plan serializes"))
}

#[derive(Deserialize)]
struct DroneInput {
    id: String,
    x: f64,
    y: f64,
    #[serde(default)]
    z: Option<f64>,
}

fn run_formation_planner(input: &Value) -> Result<Value, WotError> {
    let shape: FormationShape = input["shape"].as_str().unwrap_or_default().parse()?;
    let center: Point2 = parse(&input["center"], "center")?;
    let orientation_deg = input["orientation_deg"].as_f64().unwrap_or(0.0);
    let n = input["n"].as_u64().unwrap_or(0) as usize;
    let plan = plan_drone_formation(
        shape,
        center,
        orientation_deg.to_radians(),
        input["spacing"].as_f64().unwrap_or(f64::NAN),
        n,
        input["altitude"].as_f64().unwrap_or(f64::NAN),
    )?;
    let mut out = json!({
        "shape": plan.shape.as_str(),
        "center": plan.center,
        "orientation_deg": orientation_deg,
        "spacing": plan.spacing,
        "slots": plan.slots,
    });
    if !input["drones"].is_null() {
        let drones: Vec<DroneInput> = parse(&input["drones"], "drones")?;
        let objective: Objective = match input["objective"].as_str() {
            None => Objective::Maximize,
            Some(s) => s.parse()?,
        };
        if drones.len() != plan.slots.len() {
            return Err(PlanError::SizeMismatch(drones.len(), plan.slots.len()).into());
        }
        let positions: Vec<Vec3> = drones
            .iter()
            .map(|d| Vec3::new(d.x, d.y, d.z.unwrap_or(0.0)))
            .collect();
        let slots: Vec<Vec3> = plan.slots.iter().map(|s| s.as_vec3()).collect();
        let result = assign_slots(&positions, &slots, objective)?;
        let assignment: Vec<Value> = drones
            .iter()
            .zip(&result.permutation)
            .map(|(d, &j)| {
                let s = plan.slots[j];
                json!({"drone": d.id, "slot": j, "x": s.x, "y": s.y, "alt": s.alt})
            })
            .collect();
        out["assignment"] = Value::Array(assignment);
        out["total_displacement"] = json!(result.total_displacement);
    }
    Ok(out)
}
