//! Binary success criteria and run metrics.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::spec::MissionSpec;
use super::EvalError;
use crate::agent::{CallOrigin, Exchange, MissionKind, RunTrace};
use crate::gateway::{CALL_ACTION, PLAN_AREA_COVERAGE, PLAN_DRONE_FORMATION, WRITE_PROPERTY};
use crate::geometry::{Point2, Slot, Vec3};
use crate::planners::{detect_star, plan_drone_formation, CoveragePlan, FormationPlan, FormationShape};
use crate::sim::{DeviceKind, WorldSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessClass {
    Full,
    EarlyExit,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    SlotsNotReached,
    NotLanded,
    NotDisarmed,
    Collision,
    NoStar,
    OutsideRegion,
    MissingReadings,
    FalsePositive,
    FalseNegative,
    MissingPlan,
    RunError,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SlotsNotReached => "slots_not_reached",
            Self::NotLanded => "not_landed",
            Self::NotDisarmed => "not_disarmed",
            Self::Collision => "collision",
            Self::NoStar => "no_star",
            Self::OutsideRegion => "outside_region",
            Self::MissingReadings => "missing_readings",
            Self::FalsePositive => "false_positive",
            Self::FalseNegative => "false_negative",
            Self::MissingPlan => "missing_plan",
            Self::RunError => "run_error",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuccessVerdict {
    pub class: SuccessClass,
    pub reasons: Vec<Reason>,
}

impl SuccessVerdict {
    pub fn full() -> Self {
        Self {
            class: SuccessClass::Full,
            reasons: Vec::new(),
        }
    }

    pub fn fail(mut reasons: Vec<Reason>) -> Self {
        reasons.sort();
        reasons.dedup();
        assert!(!reasons.is_empty(), "a failing verdict needs a reason");
        Self {
            class: SuccessClass::Fail,
            reasons,
        }
    }

    pub fn is_full(&self) -> bool {
        self.class == SuccessClass::Full
    }

    /// Full when nothing is missing; early exit when only the
    /// termination constraints failed; fail otherwise.
    fn grade(objective: Vec<Reason>, termination: Vec<Reason>, early_exit_allowed: bool) -> Self {
        if objective.is_empty() && termination.is_empty() {
            return Self::full();
        }
        if objective.is_empty() && early_exit_allowed {
            let mut reasons = termination;
            reasons.sort();
            reasons.dedup();
            return Self {
                class: SuccessClass::EarlyExit,
                reasons,
            };
        }
        Self::fail(objective.into_iter().chain(termination).collect())
    }
}

/// Drones that took off during the run.
fn participants(world: &WorldSnapshot) -> Vec<&crate::sim::DroneState> {
    world.participating_drones()
}

/// `not_landed` / `not_disarmed` for participating drones in the final
/// snapshot. A drone still in the air only counts as not landed.
pub fn termination_reasons(world: &WorldSnapshot) -> Vec<Reason> {
    let mut reasons = Vec::new();
    for d in participants(world) {
        if d.airborne || !d.mode.is_terminal() {
            reasons.push(Reason::NotLanded);
        } else if d.armed {
            reasons.push(Reason::NotDisarmed);
        }
    }
    reasons.sort();
    reasons.dedup();
    reasons
}

fn collision_reason(world: &WorldSnapshot) -> Vec<Reason> {
    if count_collisions(world) > 0 {
        vec![Reason::Collision]
    } else {
        Vec::new()
    }
}

fn successful<'a>(trace: &'a RunTrace, tool: &'a str) -> impl Iterator<Item = &'a Exchange> + 'a {
    trace
        .exchanges()
        .filter(move |e| e.origin != CallOrigin::Probe && e.call.tool == tool && e.result.is_ok())
}

/// The last coverage plan returned to the agent.
pub fn coverage_plan_from_trace(trace: &RunTrace) -> Option<CoveragePlan> {
    successful(trace, PLAN_AREA_COVERAGE)
        .filter_map(|e| serde_json::from_value(e.result.payload.clone()).ok())
        .last()
}

/// The last star plan returned to the agent.
pub fn star_plan_from_trace(trace: &RunTrace) -> Option<FormationPlan> {
    successful(trace, PLAN_DRONE_FORMATION)
        .filter_map(|e| {
            let p = &e.result.payload;
            let shape: FormationShape = p["shape"].as_str()?.parse().ok()?;
            let slots: Vec<Slot> = serde_json::from_value(p["slots"].clone()).ok()?;
            Some(FormationPlan {
                shape,
                center: serde_json::from_value(p["center"].clone()).ok()?,
                orientation: p["orientation_deg"].as_f64()?.to_radians(),
                spacing: p["spacing"].as_f64()?,
                slots,
            })
        })
        .filter(|p| p.shape == FormationShape::Star)
        .last()
}

fn slot_reached(world: &WorldSnapshot, slot: &Slot, h_tol: f64, v_tol: f64) -> bool {
    let target = Point2::new(slot.x, slot.y);
    world.history.iter().any(|f| {
        f.drones.iter().any(|d| {
            d.position.horizontal().distance(&target) <= h_tol && (d.position.z - slot.alt).abs() <= v_tol
        })
    })
}

pub fn score_coverage_with_tool(
    world: &WorldSnapshot,
    plan: &CoveragePlan,
    spec: &MissionSpec,
) -> SuccessVerdict {
    let tol = spec.tolerances;
    let mut objective = Vec::new();
    if !plan
        .slots
        .iter()
        .all(|s| slot_reached(world, s, tol.slot_horizontal_m, tol.slot_vertical_m))
    {
        objective.push(Reason::SlotsNotReached);
    }
    let collisions = collision_reason(world);
    if !collisions.is_empty() {
        return SuccessVerdict::fail(collisions.into_iter().chain(objective).chain(termination_reasons(world)).collect());
    }
    SuccessVerdict::grade(objective, termination_reasons(world), true)
}

pub fn score_coverage_no_tool(world: &WorldSnapshot, spec: &MissionSpec) -> SuccessVerdict {
    let inside = participants(world)
        .iter()
        .any(|d| !d.airborne && spec.region.contains_strictly(d.position.horizontal()));
    let mut reasons = collision_reason(world);
    if !inside {
        reasons.push(Reason::OutsideRegion);
    }
    if reasons.is_empty() {
        SuccessVerdict::full()
    } else {
        SuccessVerdict::fail(reasons)
    }
}

/// Simulated time of the first land or RTL command issued after the last
/// goto, if any.
fn formation_instant(trace: &RunTrace) -> Option<f64> {
    let commands: Vec<(f64, String)> = trace
        .exchanges()
        .filter(|e| e.origin != CallOrigin::Probe && e.result.is_ok() && e.call.tool == CALL_ACTION)
        .map(|e| {
            let action = e.call.arguments["action"].as_str().unwrap_or_default();
            let mode = e.call.arguments["input"]["mode"].as_str().unwrap_or_default();
            let kind = match (action, mode) {
                ("goto", _) => "goto",
                ("land" | "rtl", _) | ("set_mode", "LAND" | "RTL") => "descend",
                _ => "other",
            };
            (e.sim_time_s, kind.to_string())
        })
        .collect();
    let last_goto = commands.iter().rposition(|(_, k)| k == "goto")?;
    commands[last_goto..]
        .iter()
        .find(|(_, k)| k == "descend")
        .map(|(t, _)| *t)
}

/// Positions of the participating drones at the formation instant.
pub fn formation_positions(trace: &RunTrace, world: &WorldSnapshot) -> Vec<Vec3> {
    let frame = match formation_instant(trace) {
        Some(t) => world.history.iter().rev().find(|f| f.time_s <= t + 1e-9),
        None => world.history.last(),
    };
    let Some(frame) = frame else {
        return Vec::new();
    };
    let ids: Vec<&str> = participants(world).iter().map(|d| d.id.as_str()).collect();
    frame
        .drones
        .iter()
        .filter(|d| ids.contains(&d.id.as_str()))
        .map(|d| d.position)
        .collect()
}

/// Star plan from the trace, or the plan the mission spec implies.
pub fn formation_plan(trace: &RunTrace, spec: &MissionSpec) -> Result<FormationPlan, EvalError> {
    if let Some(p) = star_plan_from_trace(trace) {
        return Ok(p);
    }
    let f = &spec.formation;
    if f.shape != FormationShape::Star {
        return Err(EvalError::MissingPlan);
    }
    plan_drone_formation(
        f.shape,
        f.center,
        f.orientation_deg.to_radians(),
        f.spacing,
        spec.n_drones,
        f.altitude,
    )
    .map_err(|_| EvalError::MissingPlan)
}

pub fn score_formation(
    trace: &RunTrace,
    world: &WorldSnapshot,
    plan: &FormationPlan,
    spec: &MissionSpec,
) -> SuccessVerdict {
    let positions = formation_positions(trace, world);
    let star = detect_star(&positions, plan, spec.tolerances.star_m).unwrap_or(false);
    let objective = if star { Vec::new() } else { vec![Reason::NoStar] };
    let collisions = collision_reason(world);
    if !collisions.is_empty() {
        return SuccessVerdict::fail(collisions.into_iter().chain(objective).chain(termination_reasons(world)).collect());
    }
    SuccessVerdict::grade(objective, termination_reasons(world), true)
}

/// Sensor readings the agent obtained, keyed by device id.
pub fn readings_from_trace(trace: &RunTrace) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for e in successful(trace, CALL_ACTION) {
        if e.call.arguments["action"] == "sample" {
            if let (Some(dev), Some(v)) = (
                e.call.arguments["thing"].as_str(),
                e.result.payload["output"]["value"].as_f64(),
            ) {
                out.insert(dev.to_string(), v);
            }
        }
    }
    out
}

pub fn score_irrigation(trace: &RunTrace, world: &WorldSnapshot, spec: &MissionSpec) -> Result<SuccessVerdict, EvalError> {
    let (humidity, temperature, actuator) = spec.sensor_layout()?;
    let readings = readings_from_trace(trace);
    let termination = termination_reasons(world);
    let hum: Vec<f64> = humidity.iter().filter_map(|id| readings.get(id).copied()).collect();
    let temp = readings.get(&temperature).copied();
    let (Some(t), 3) = (temp, hum.len()) else {
        return Ok(SuccessVerdict::fail(
            std::iter::once(Reason::MissingReadings).chain(termination).collect(),
        ));
    };
    let h_mean = hum.iter().sum::<f64>() / 3.0;
    let required = spec.rule.required(h_mean, t);
    let triggered = world
        .devices
        .iter()
        .find(|d| d.id == actuator && d.kind == DeviceKind::IrrigationActuator)
        .is_some_and(|d| d.triggered);
    let objective = match (triggered, required) {
        (true, false) => vec![Reason::FalsePositive],
        (false, true) => vec![Reason::FalseNegative],
        _ => Vec::new(),
    };
    Ok(SuccessVerdict::grade(objective, termination, true))
}

/// Scores a run from its trace and final world. Scoring preconditions
/// that fail become a failing verdict.
pub fn score_run(spec: &MissionSpec, trace: &RunTrace, world: &WorldSnapshot) -> SuccessVerdict {
    let result = match spec.kind {
        MissionKind::CoverageWithTool => coverage_plan_from_trace(trace)
            .ok_or(EvalError::MissingPlan)
            .map(|plan| score_coverage_with_tool(world, &plan, spec)),
        MissionKind::CoverageNoTool => Ok(score_coverage_no_tool(world, spec)),
        MissionKind::Formation => formation_plan(trace, spec).map(|plan| score_formation(trace, world, &plan, spec)),
        MissionKind::Irrigation => score_irrigation(trace, world, spec),
    };
    match result {
        Ok(v) => v,
        Err(EvalError::MissingPlan) => SuccessVerdict::fail(vec![Reason::MissingPlan]),
        Err(_) => SuccessVerdict::fail(vec![Reason::RunError]),
    }
}

pub fn count_collisions(world: &WorldSnapshot) -> usize {
    world.collisions.len()
}

/// Simulated seconds from the first command to the end of the run; zero
/// when nothing was commanded.
pub fn measure_exec_time(trace: &RunTrace) -> f64 {
    trace
        .exchanges()
        .find(|e| {
            e.origin != CallOrigin::Probe
                && e.result.is_ok()
                && matches!(e.call.tool.as_str(), CALL_ACTION | WRITE_PROPERTY)
        })
        .map_or(0.0, |e| (trace.sim_end_s - e.sim_time_s).max(0.0))
}

pub fn measure_energy(world: &WorldSnapshot) -> f64 {
    world.energy_mah
}
