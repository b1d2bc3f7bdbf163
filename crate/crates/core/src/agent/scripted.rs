//! Deterministic oracle reasoner.
//!
//! Drives a mission through the gateway tools only: discover, read the
//! mission Thing, plan, arm, take off to a per-drone altitude layer, fly
//! to the targets, (sample and decide), land, verify and conclude. Each
//! drone cruises on its own layer so horizontal transits never cross at
//! the same height.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::context::{AgentContext, Message};
use super::ledger::estimate_tokens;
use super::reasoner::{Reasoner, ReasonerError, ReasonerStep, Usage};
use crate::gateway::{
    ToolCall, ToolDefinition, CALL_ACTION, LIST_WEB_THINGS, PLAN_AREA_COVERAGE, PLAN_DRONE_FORMATION,
    READ_PROPERTY, SEND_DRONES, WAIT_ARMED, WAIT_ARRIVED, WAIT_LANDED,
};
use crate::geometry::{Point2, Region, Vec3};
use crate::planners::{assign_slots, plan_area_coverage, plan_drone_formation, CameraModel, FormationShape, Objective};

/// Altitude of the lowest transit layer.
pub const LAYER_BASE_M: f64 = 20.0;
/// Vertical gap between neighbouring transit layers.
pub const LAYER_STEP_M: f64 = 2.5;
/// Distance at which a polled drone counts as arrived.
pub const ARRIVED_M: f64 = 1.0;
/// Timeout passed to the wait helpers.
pub const WAIT_TIMEOUT_S: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionKind {
    CoverageWithTool,
    CoverageNoTool,
    Formation,
    Irrigation,
}

impl MissionKind {
    pub const ALL: [MissionKind; 4] = [
        Self::CoverageWithTool,
        Self::CoverageNoTool,
        Self::Formation,
        Self::Irrigation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CoverageWithTool => "coverage_with_tool",
            Self::CoverageNoTool => "coverage_no_tool",
            Self::Formation => "formation",
            Self::Irrigation => "irrigation",
        }
    }

    /// Name used on the command line.
    pub fn cli_name(self) -> &'static str {
        match self {
            Self::CoverageWithTool => "coverage",
            Self::CoverageNoTool => "coverage-no-tool",
            Self::Formation => "formation",
            Self::Irrigation => "irrigation",
        }
    }
}

impl fmt::Display for MissionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MissionKind {
    type Err = ReasonerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coverage" | "coverage_with_tool" | "coverage-with-tool" => Ok(Self::CoverageWithTool),
            "coverage_no_tool" | "coverage-no-tool" => Ok(Self::CoverageNoTool),
            "formation" => Ok(Self::Formation),
            "irrigation" => Ok(Self::Irrigation),
            other => Err(ReasonerError::UnsupportedMission(other.to_string())),
        }
    }
}

/// Deliberate mistakes for exercising scorers and guardrails. A faulty
/// reasoner ignores guardrail feedback and concludes again.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Arms the first drone again after everyone has landed.
    RearmAfterLanding,
    /// Never lands the last participating drone.
    LeaveOneHovering,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Discover,
    ReadMission,
    Plan,
    Arm,
    AwaitArmed,
    Takeoff,
    AwaitTakeoff,
    Transit,
    AwaitTransit,
    Settle,
    AwaitSettle,
    Sample,
    Decide,
    Land,
    AwaitLanded,
    Rearm,
    Verify,
    Disarm,
    Conclude,
}

enum Emit {
    Calls(Vec<(String, Value)>),
    Conclude(String),
}

type Outcome = Result<Value, String>;

#[derive(Debug, Default)]
struct Memory {
    tools: BTreeSet<String>,
    uavs: Vec<String>,
    sensors: Vec<(String, String)>,
    actuator: Option<String>,
    mission: Option<String>,
    region: Option<Region>,
    alt_bounds: (f64, f64),
    fov_deg: f64,
    formation: Value,
    rule: Option<(f64, f64)>,
    positions: BTreeMap<String, Vec3>,
    sensor_positions: BTreeMap<String, Vec3>,
    participants: Vec<String>,
    /// Final target of each participant, same order.
    targets: Vec<Vec3>,
    /// Positions the current wait expects, keyed by drone.
    expect: BTreeMap<String, Vec3>,
    /// Property reads issued by the pending step, in order.
    reads: Vec<(String, String)>,
    readings: BTreeMap<String, f64>,
    /// Drones to land; filled on first entry to the landing phase.
    landing: Option<Vec<String>>,
    disarming: Vec<String>,
    decision: Option<bool>,
}

pub struct ScriptedReasoner {
    kind: MissionKind,
    fault: Option<Fault>,
    phase: Phase,
    issued: bool,
    finished: bool,
    m: Memory,
}

impl ScriptedReasoner {
    pub fn new(kind: MissionKind) -> Self {
        Self {
            kind,
            fault: None,
            phase: Phase::Discover,
            issued: false,
            finished: false,
            m: Memory::default(),
        }
    }

    /// Builds the reasoner from a mission name as accepted by [`MissionKind`].
    pub fn for_mission(name: &str) -> Result<Self, ReasonerError> {
        Ok(Self::new(name.parse()?))
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }

    pub fn kind(&self) -> MissionKind {
        self.kind
    }

    fn helpers(&self) -> bool {
        [SEND_DRONES, WAIT_ARMED, WAIT_ARRIVED, WAIT_LANDED]
            .iter()
            .all(|t| self.m.tools.contains(*t))
    }

    fn layer(i: usize) -> f64 {
        LAYER_BASE_M + LAYER_STEP_M * i as f64
    }

    fn next_emit(&mut self, mut results: Option<Vec<Outcome>>) -> Result<Emit, String> {
        loop {
            match results.take() {
                Some(r) => self.consume(r)?,
                None => {
                    if let Some(emit) = self.issue()? {
                        return Ok(emit);
                    }
                }
            }
        }
    }

    fn goto(&self, drone: &str, p: Vec3) -> (String, Value) {
        action(drone, "goto", json!({"x": p.x, "y": p.y, "alt": p.z}))
    }

    fn send(&self, moves: Vec<(String, Vec3)>) -> Emit {
        if self.helpers() {
            let targets: Vec<Value> = moves
                .iter()
                .map(|(d, p)| json!({"drone": d, "x": p.x, "y": p.y, "alt": p.z}))
                .collect();
            Emit::Calls(vec![(SEND_DRONES.into(), json!({ "targets": targets }))])
        } else {
            Emit::Calls(moves.iter().map(|(d, p)| self.goto(d, *p)).collect())
        }
    }

    fn reads(&mut self, reads: Vec<(String, String)>) -> Emit {
        let calls = reads
            .iter()
            .map(|(t, p)| (READ_PROPERTY.to_string(), json!({"thing": t, "property": p})))
            .collect();
        self.m.reads = reads;
        Emit::Calls(calls)
    }

    fn wait(&self, tool: &str, drones: &[String]) -> Emit {
        Emit::Calls(vec![(
            tool.to_string(),
            json!({"drones": drones, "timeout_s": WAIT_TIMEOUT_S}),
        )])
    }

    fn poll(&mut self) -> Emit {
        if self.helpers() {
            let drones: Vec<String> = self.m.expect.keys().cloned().collect();
            return self.wait(WAIT_ARRIVED, &drones);
        }
        let reads = self
            .m
            .expect
            .keys()
            .map(|d| (d.clone(), "position".to_string()))
            .collect();
        self.reads(reads)
    }

    /// Emits the calls of the current phase, or moves on and returns None.
    fn issue(&mut self) -> Result<Option<Emit>, String> {
        let emit = match self.phase {
            Phase::Discover => Emit::Calls(vec![(LIST_WEB_THINGS.into(), json!({}))]),
            Phase::ReadMission => {
                let mission = self.m.mission.clone().ok_or("no mission_area Thing listed")?;
                let mut reads: Vec<(String, String)> = ["region", "altitude_bounds", "camera_fov_deg"]
                    .iter()
                    .map(|p| (mission.clone(), p.to_string()))
                    .collect();
                match self.kind {
                    MissionKind::Formation => reads.push((mission.clone(), "formation".into())),
                    MissionKind::Irrigation => {
                        reads.push((mission.clone(), "irrigation_rule".into()));
                        for (s, _) in &self.m.sensors {
                            reads.push((s.clone(), "position".into()));
                        }
                    }
                    _ => {}
                }
                for u in &self.m.uavs {
                    reads.push((u.clone(), "position".into()));
                }
                self.reads(reads)
            }
            Phase::Plan => match self.plan_call()? {
                Some(call) => Emit::Calls(vec![call]),
                None => {
                    self.phase = Phase::Arm;
                    return Ok(None);
                }
            },
            Phase::Arm => Emit::Calls(
                self.m
                    .participants
                    .iter()
                    .map(|d| action(d, "arm", json!({})))
                    .collect(),
            ),
            Phase::AwaitArmed => self.wait(WAIT_ARMED, &self.m.participants),
            Phase::Takeoff => {
                let mut calls = Vec::new();
                self.m.expect.clear();
                for (i, d) in self.m.participants.iter().enumerate() {
                    let home = self.m.positions[d];
                    self.m.expect.insert(d.clone(), Vec3::new(home.x, home.y, Self::layer(i)));
                    calls.push(action(d, "takeoff", json!({"alt": Self::layer(i)})));
                }
                Emit::Calls(calls)
            }
            Phase::Transit | Phase::Settle => {
                if self.phase == Phase::Settle && self.kind == MissionKind::Irrigation {
                    self.phase = Phase::Sample;
                    return Ok(None);
                }
                self.m.expect.clear();
                let mut moves = Vec::new();
                for (i, d) in self.m.participants.iter().enumerate() {
                    let t = self.m.targets[i];
                    let z = if self.phase == Phase::Transit { Self::layer(i) } else { t.z };
                    let p = Vec3::new(t.x, t.y, z);
                    self.m.expect.insert(d.clone(), p);
                    moves.push((d.clone(), p));
                }
                self.send(moves)
            }
            Phase::AwaitTakeoff | Phase::AwaitTransit | Phase::AwaitSettle => self.poll(),
            Phase::Sample => Emit::Calls(
                self.m
                    .sensors
                    .iter()
                    .zip(&self.m.participants)
                    .map(|((s, _), d)| action(s, "sample", json!({"requester_id": d})))
                    .collect(),
            ),
            Phase::Decide => {
                let required = self.decide()?;
                self.m.decision = Some(required);
                if !required {
                    self.phase = Phase::Land;
                    return Ok(None);
                }
                let actuator = self.m.actuator.clone().ok_or("no irrigation actuator listed")?;
                Emit::Calls(vec![action(&actuator, "trigger", json!({}))])
            }
            Phase::Land => {
                let landing = self.landing().to_vec();
                if landing.is_empty() {
                    self.phase = Phase::AwaitLanded;
                    return Ok(None);
                }
                Emit::Calls(landing.iter().map(|d| action(d, "land", json!({}))).collect())
            }
            Phase::AwaitLanded => {
                let landing = self.landing().to_vec();
                if landing.is_empty() {
                    self.phase = self.after_landing();
                    return Ok(None);
                }
                if self.helpers() {
                    self.wait(WAIT_LANDED, &landing)
                } else {
                    let reads = landing
                        .iter()
                        .map(|d| (d.clone(), "position".to_string()))
                        .collect();
                    self.reads(reads)
                }
            }
            Phase::Rearm => {
                let first = self.m.participants.first().cloned().ok_or("no participants")?;
                Emit::Calls(vec![action(&first, "arm", json!({}))])
            }
            Phase::Verify => {
                let reads = self
                    .m
                    .uavs
                    .iter()
                    .flat_map(|u| [(u.clone(), "armed".to_string()), (u.clone(), "airborne".to_string())])
                    .collect();
                self.reads(reads)
            }
            Phase::Disarm => Emit::Calls(
                self.m
                    .disarming
                    .iter()
                    .map(|d| action(d, "disarm", json!({})))
                    .collect(),
            ),
            Phase::Conclude => Emit::Conclude(self.summary()),
        };
        Ok(Some(emit))
    }

    fn landing(&mut self) -> &[String] {
        let fault = self.fault;
        let participants = &self.m.participants;
        self.m.landing.get_or_insert_with(|| {
            let mut l = participants.clone();
            if fault == Some(Fault::LeaveOneHovering) {
                l.pop();
            }
            l
        })
    }

    fn after_landing(&self) -> Phase {
        if self.fault == Some(Fault::RearmAfterLanding) {
            Phase::Rearm
        } else {
            Phase::Verify
        }
    }

    /// Handles the results of the calls issued by the current phase.
    fn consume(&mut self, results: Vec<Outcome>) -> Result<(), String> {
        let poll_phase = matches!(
            self.phase,
            Phase::AwaitTakeoff | Phase::AwaitTransit | Phase::AwaitSettle | Phase::AwaitLanded | Phase::Verify
        );
        if !poll_phase {
            if let Some(e) = results.iter().find_map(|r| r.as_ref().err()) {
                return Err(e.clone());
            }
        }
        let values = || results.iter().map(|r| r.clone().unwrap_or(Value::Null));
        self.phase = match self.phase {
            Phase::Discover => {
                self.ingest_listing(&results[0].clone()?);
                Phase::ReadMission
            }
            Phase::ReadMission => {
                let reads = std::mem::take(&mut self.m.reads);
                for ((thing, prop), v) in reads.iter().zip(values()) {
                    self.ingest_read(thing, prop, &v["value"])?;
                }
                self.m.participants = match self.kind {
                    MissionKind::Irrigation => {
                        if self.m.uavs.len() < self.m.sensors.len() {
                            return Err("fewer drones than sensors".into());
                        }
                        self.m.uavs[..self.m.sensors.len()].to_vec()
                    }
                    _ => self.m.uavs.clone(),
                };
                Phase::Plan
            }
            Phase::Plan => {
                let v = values().next().unwrap_or_default();
                self.m.targets = match self.kind {
                    MissionKind::Formation => {
                        let mut by_drone = BTreeMap::new();
                        for a in v["assignment"].as_array().ok_or("plan has no assignment")? {
                            by_drone.insert(a["drone"].as_str().unwrap_or_default().to_string(), slot_vec(a)?);
                        }
                        self.m
                            .participants
                            .iter()
                            .map(|d| by_drone.get(d).copied().ok_or(format!("{d} has no slot")))
                            .collect::<Result<_, _>>()?
                    }
                    _ => v["slots"]
                        .as_array()
                        .ok_or("plan has no slots")?
                        .iter()
                        .map(slot_vec)
                        .collect::<Result<_, _>>()?,
                };
                if self.m.targets.len() < self.m.participants.len() {
                    return Err("plan has fewer slots than drones".into());
                }
                Phase::Arm
            }
            Phase::Arm => {
                if self.helpers() {
                    Phase::AwaitArmed
                } else {
                    Phase::Takeoff
                }
            }
            Phase::AwaitArmed => {
                require_satisfied(&results[0], "arming")?;
                Phase::Takeoff
            }
            Phase::Takeoff => Phase::AwaitTakeoff,
            Phase::Transit => Phase::AwaitTransit,
            Phase::Settle => Phase::AwaitSettle,
            p @ (Phase::AwaitTakeoff | Phase::AwaitTransit | Phase::AwaitSettle) => {
                if self.arrived(&results)? {
                    match p {
                        Phase::AwaitTakeoff => Phase::Transit,
                        Phase::AwaitTransit => Phase::Settle,
                        _ => match self.kind {
                            MissionKind::Irrigation => Phase::Sample,
                            _ => Phase::Land,
                        },
                    }
                } else {
                    p
                }
            }
            Phase::Sample => {
                for ((s, _), v) in self.m.sensors.iter().zip(values()) {
                    let x = v["output"]["value"].as_f64().ok_or(format!("{s} returned no value"))?;
                    self.m.readings.insert(s.clone(), x);
                }
                Phase::Decide
            }
            Phase::Decide => Phase::Land,
            Phase::Land => Phase::AwaitLanded,
            Phase::AwaitLanded => {
                let done = if self.helpers() {
                    require_satisfied(&results[0], "landing").is_ok()
                } else {
                    values().all(|v| v["value"]["z"].as_f64().is_some_and(|z| z <= 1e-9))
                };
                if done {
                    self.after_landing()
                } else {
                    Phase::AwaitLanded
                }
            }
            Phase::Rearm => Phase::Verify,
            Phase::Verify => {
                let reads = std::mem::take(&mut self.m.reads);
                let mut armed = BTreeSet::new();
                let mut airborne = BTreeSet::new();
                for ((thing, prop), r) in reads.iter().zip(&results) {
                    let v = r.clone()?;
                    if v["value"] == Value::Bool(true) {
                        if prop == "armed" {
                            armed.insert(thing.clone());
                        } else {
                            airborne.insert(thing.clone());
                        }
                    }
                }
                if self.fault.is_some() {
                    Phase::Conclude
                } else if !airborne.is_empty() {
                    self.m.landing = Some(self.m.uavs.iter().filter(|u| airborne.contains(*u)).cloned().collect());
                    Phase::Land
                } else if !armed.is_empty() {
                    self.m.disarming = self.m.uavs.iter().filter(|u| armed.contains(*u)).cloned().collect();
                    Phase::Disarm
                } else {
                    Phase::Conclude
                }
            }
            Phase::Disarm => Phase::Verify,
            Phase::Conclude => Phase::Conclude,
        };
        Ok(())
    }

    fn arrived(&mut self, results: &[Outcome]) -> Result<bool, String> {
        if self.helpers() {
            require_satisfied(&results[0], "arrival")?;
            return Ok(true);
        }
        let reads = std::mem::take(&mut self.m.reads);
        let mut all = true;
        for ((drone, _), r) in reads.iter().zip(results) {
            let p = vec3(&r.clone()?["value"]).ok_or(format!("{drone} position unreadable"))?;
            self.m.positions.insert(drone.clone(), p);
            all &= self.m.expect.get(drone).is_some_and(|e| e.distance(&p) <= ARRIVED_M);
        }
        Ok(all)
    }

    fn ingest_listing(&mut self, listing: &Value) {
        let things = listing["things"].as_array().cloned().unwrap_or_default();
        for t in &things {
            let id = t["id"].as_str().unwrap_or_default().to_string();
            match t["type"].as_str().unwrap_or_default() {
                "uav" => self.m.uavs.push(id),
                k @ ("humidity_sensor" | "temperature_sensor") => self.m.sensors.push((id, k.to_string())),
                "irrigation_actuator" => self.m.actuator = Some(id),
                "mission_area" => self.m.mission = Some(id),
                _ => {}
            }
        }
        self.m.uavs.sort_by_key(|u| natural_key(u));
        self.m.sensors.sort_by_key(|(s, _)| natural_key(s));
    }

    fn ingest_read(&mut self, thing: &str, prop: &str, v: &Value) -> Result<(), String> {
        let bad = || format!("{thing}.{prop} has an unexpected value {v}");
        match prop {
            "region" => self.m.region = Some(serde_json::from_value(v.clone()).map_err(|_| bad())?),
            "altitude_bounds" => {
                self.m.alt_bounds = (v["min"].as_f64().ok_or_else(bad)?, v["max"].as_f64().ok_or_else(bad)?)
            }
            "camera_fov_deg" => self.m.fov_deg = v.as_f64().ok_or_else(bad)?,
            "formation" => self.m.formation = v.clone(),
            "irrigation_rule" => {
                self.m.rule = Some((
                    v["humidity_pct"].as_f64().ok_or_else(bad)?,
                    v["temperature_c"].as_f64().ok_or_else(bad)?,
                ))
            }
            "position" => {
                let p = vec3(v).ok_or_else(bad)?;
                if self.m.sensors.iter().any(|(s, _)| s == thing) {
                    self.m.sensor_positions.insert(thing.to_string(), p);
                } else {
                    self.m.positions.insert(thing.to_string(), p);
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The planning tool call for this mission, or None after planning
    /// internally.
    fn plan_call(&mut self) -> Result<Option<(String, Value)>, String> {
        let region = self.m.region.ok_or("mission region unknown")?;
        let n = self.m.participants.len();
        let (alt_min, alt_max) = self.m.alt_bounds;
        match self.kind {
            MissionKind::CoverageWithTool if self.m.tools.contains(PLAN_AREA_COVERAGE) => Ok(Some((
                PLAN_AREA_COVERAGE.into(),
                json!({
                    "region": region,
                    "n": n,
                    "fov_deg": self.m.fov_deg,
                    "alt_min": alt_min,
                    "alt_max": alt_max,
                }),
            ))),
            MissionKind::CoverageWithTool | MissionKind::CoverageNoTool => {
                let camera = CameraModel::from_degrees(self.m.fov_deg).map_err(|e| e.to_string())?;
                let plan = plan_area_coverage(&region, n, camera, alt_min, alt_max).map_err(|e| e.to_string())?;
                self.m.targets = plan.slots.iter().map(|s| s.as_vec3()).collect();
                Ok(None)
            }
            MissionKind::Formation => {
                let f = &self.m.formation;
                let shape = f["shape"].as_str().unwrap_or("star").to_string();
                let center = Point2::new(
                    f["center"]["x"].as_f64().ok_or("formation center unknown")?,
                    f["center"]["y"].as_f64().ok_or("formation center unknown")?,
                );
                let spacing = f["spacing"].as_f64().ok_or("formation spacing unknown")?;
                let altitude = f["altitude"].as_f64().ok_or("formation altitude unknown")?;
                let orientation_deg = f["orientation_deg"].as_f64().unwrap_or(0.0);
                if self.m.tools.contains(PLAN_DRONE_FORMATION) {
                    let drones: Vec<Value> = self
                        .m
                        .participants
                        .iter()
                        .map(|d| {
                            let p = self.m.positions[d];
                            json!({"id": d, "x": p.x, "y": p.y, "z": p.z})
                        })
                        .collect();
                    return Ok(Some((
                        PLAN_DRONE_FORMATION.into(),
                        json!({
                            "shape": shape,
                            "center": center,
                            "orientation_deg": orientation_deg,
                            "spacing": spacing,
                            "n": n,
                            "altitude": altitude,
                            "drones": drones,
                            "objective": "maximize",
                        }),
                    )));
                }
                let shape: FormationShape = shape.parse().map_err(|e: crate::planners::PlanError| e.to_string())?;
                let plan = plan_drone_formation(shape, center, orientation_deg.to_radians(), spacing, n, altitude)
                    .map_err(|e| e.to_string())?;
                let slots: Vec<Vec3> = plan.slots.iter().map(|s| s.as_vec3()).collect();
                let positions: Vec<Vec3> = self.m.participants.iter().map(|d| self.m.positions[d]).collect();
                let a = assign_slots(&positions, &slots, Objective::Maximize).map_err(|e| e.to_string())?;
                self.m.targets = a.permutation.iter().map(|&j| slots[j]).collect();
                Ok(None)
            }
            MissionKind::Irrigation => {
                self.m.targets = self
                    .m
                    .sensors
                    .iter()
                    .enumerate()
                    .map(|(i, (s, _))| {
                        let p = self.m.sensor_positions[s];
                        Vec3::new(p.x, p.y, Self::layer(i))
                    })
                    .collect();
                Ok(None)
            }
        }
    }

    fn decide(&self) -> Result<bool, String> {
        let (h_max, t_min) = self.m.rule.ok_or("irrigation rule unknown")?;
        let mean = |kind: &str| {
            let xs: Vec<f64> = self
                .m
                .sensors
                .iter()
                .filter(|(_, k)| k == kind)
                .filter_map(|(s, _)| self.m.readings.get(s).copied())
                .collect();
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        let h = mean("humidity_sensor").ok_or("no humidity readings")?;
        let t = mean("temperature_sensor").ok_or("no temperature readings")?;
        Ok(h <= h_max || t >= t_min)
    }

    fn summary(&self) -> String {
        let n = self.m.participants.len();
        match (self.kind, self.m.decision) {
            (MissionKind::Irrigation, Some(d)) => format!(
                "Mission complete: {} sensor readings collected, irrigation {}; {n} drones landed and disarmed.",
                self.m.readings.len(),
                if d { "triggered" } else { "not required" }
            ),
            _ => format!("Mission complete: {n} drones reached their targets, landed and disarmed."),
        }
    }
}

fn action(thing: &str, action: &str, input: Value) -> (String, Value) {
    (
        CALL_ACTION.to_string(),
        json!({"thing": thing, "action": action, "input": input}),
    )
}

fn vec3(v: &Value) -> Option<Vec3> {
    Some(Vec3::new(v["x"].as_f64()?, v["y"].as_f64()?, v["z"].as_f64()?))
}

fn slot_vec(v: &Value) -> Result<Vec3, String> {
    match (v["x"].as_f64(), v["y"].as_f64(), v["alt"].as_f64()) {
        (Some(x), Some(y), Some(alt)) => Ok(Vec3::new(x, y, alt)),
        _ => Err(format!("malformed slot {v}")),
    }
}

fn require_satisfied(r: &Outcome, what: &str) -> Result<(), String> {
    let v = r.clone()?;
    if v["satisfied"] == Value::Bool(true) {
        Ok(())
    } else {
        Err(format!("{what} not confirmed: {}", v["per_drone"]))
    }
}

/// Sorts `uav-2` before `uav-10`.
fn natural_key(id: &str) -> (String, u64) {
    let digits = id.len() - id.bytes().rev().take_while(u8::is_ascii_digit).count();
    (id[..digits].to_string(), id[digits..].parse().unwrap_or(0))
}

fn outcome(m: &Message) -> Outcome {
    let v: Value = serde_json::from_str(&m.content).unwrap_or(Value::Null);
    match v.as_object() {
        Some(o) if o.len() == 2 && o.contains_key("error") && o.contains_key("detail") => Err(format!(
            "{}: {}",
            o["error"].as_str().unwrap_or_default(),
            o["detail"].as_str().unwrap_or_default()
        )),
        _ => Ok(v),
    }
}

impl Reasoner for ScriptedReasoner {
    fn name(&self) -> String {
        match self.fault {
            Some(f) => format!("scripted:{}:{}", self.kind, serde_json::to_value(f).unwrap_or_default().as_str().unwrap_or_default()),
            None => format!("scripted:{}", self.kind),
        }
    }

    fn step(&mut self, ctx: &AgentContext, tools: &[ToolDefinition]) -> Result<ReasonerStep, ReasonerError> {
        self.m.tools = tools.iter().map(|t| t.name.clone()).collect();
        let guardrails = ctx.pending_guardrails();
        let results = if !guardrails.is_empty() {
            self.issued = false;
            self.phase = if self.fault.is_some() { Phase::Conclude } else { Phase::Verify };
            None
        } else if self.issued {
            Some(ctx.latest_tool_results().into_iter().map(outcome).collect())
        } else {
            None
        };
        let step = if self.finished && guardrails.is_empty() {
            ReasonerStep::conclude(self.summary())
        } else {
            match self.next_emit(results) {
                Ok(Emit::Calls(calls)) => {
                    self.issued = true;
                    ReasonerStep::act(
                        calls
                            .into_iter()
                            .enumerate()
                            .map(|(k, (tool, arguments))| ToolCall {
                                call_id: format!("call-{:03}-{}", ctx.iteration, k + 1),
                                tool,
                                arguments,
                            })
                            .collect(),
                    )
                }
                Ok(Emit::Conclude(text)) => {
                    self.finished = true;
                    self.issued = false;
                    ReasonerStep::conclude(text)
                }
                Err(e) => {
                    self.finished = true;
                    self.issued = false;
                    ReasonerStep::conclude(format!("{} {e}", super::INFEASIBLE_PREFIX))
                }
            }
        };
        let prompt: u64 = ctx.segments().all().iter().map(|s| estimate_tokens(s)).sum();
        let (text, calls) = step.completion_parts();
        let usage = Usage {
            prompt_tokens: prompt,
            completion_tokens: estimate_tokens(&text) + estimate_tokens(&calls),
        };
        Ok(step.with_usage(usage))
    }

    fn count_tokens(&self, text: &str) -> Option<u64> {
        Some(estimate_tokens(text))
    }
}
