//! Scoring, metrics and batch execution.
//!
//! A [`MissionSpec`] fully determines the world and the gateway of a run.
//! Runs are scored from the trace and the final world snapshot only, so a
//! persisted [`RunRecord`] can be re-scored later with the same result.

mod batch;
mod score;
mod spec;

pub use batch::{
    run_batch, run_single, write_json, BatchOptions, BatchReport, ReasonerFactory, RunRecord, RunReport, Stat,
    TokenTotals,
};
pub use score::{
    count_collisions, coverage_plan_from_trace, formation_plan, formation_positions, measure_energy,
    measure_exec_time, readings_from_trace, score_coverage_no_tool, score_coverage_with_tool, score_formation,
    score_irrigation, score_run, star_plan_from_trace, termination_reasons, Reason, SuccessClass,
    SuccessVerdict,
};
pub use spec::{default_field_devices, Environment, FormationSpec, MissionSpec, Tolerances, MISSION_THING_ID};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no plan found in the trace")]
    MissingPlan,
    #[error("bad sensor layout: {0}")]
    BadSensorLayout(String),
    #[error("invalid mission spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed file: {0}")]
    Format(String),
}
