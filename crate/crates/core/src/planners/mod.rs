//! Pure planning computations backing the service Things.

mod assignment;
mod coverage;
mod formation;

pub use assignment::{assign_slots, solve_min_cost, AssignmentResult, Objective, MAX_ASSIGNMENT};
pub use coverage::{
    choose_grid, coverage_ratio, coverage_ratio_of_drones, footprint_radius, plan_area_coverage,
    CameraModel, CoveragePlan,
};
pub use formation::{
    detect_star, formation_matches, plan_drone_formation, FormationPlan, FormationShape,
    DEFAULT_STAR_TOLERANCE,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("field of view must lie in (0, pi) radians, got {0}")]
    InvalidFov(f64),
    #[error("altitude must be non-negative and finite, got {0}")]
    InvalidAltitude(f64),
    #[error("region must have positive width and height")]
    InvalidRegion,
    #[error("altitude bounds must satisfy 0 < min <= max, got [{0}, {1}]")]
    InvalidAltitudeBounds(f64, f64),
    #[error("drone count must be at least 1")]
    InvalidDroneCount,
    #[error("spacing must be strictly positive, got {0}")]
    InvalidSpacing(f64),
    #[error("unsupported formation shape {0:?}")]
    UnsupportedShape(String),
    #[error("size mismatch: {0} positions vs {1} slots")]
    SizeMismatch(usize, usize),
    #[error("assignment limited to {MAX_ASSIGNMENT} drones, got {0}")]
    TooManyDrones(usize),
    #[error("objective must be maximize or minimize, got {0:?}")]
    InvalidObjective(String),
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidFov(_) => "invalid_fov",
            Self::InvalidAltitude(_) => "invalid_altitude",
            Self::InvalidRegion => "invalid_region",
            Self::InvalidAltitudeBounds(..) => "invalid_altitude_bounds",
            Self::InvalidDroneCount => "invalid_drone_count",
            Self::InvalidSpacing(_) => "invalid_spacing",
            Self::UnsupportedShape(_) => "unsupported_shape",
            Self::SizeMismatch(..) => "size_mismatch",
            Self::TooManyDrones(_) => "too_many_drones",
            Self::InvalidObjective(_) => "invalid_objective",
        }
    }
}
