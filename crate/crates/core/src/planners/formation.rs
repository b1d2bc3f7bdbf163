use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::assignment::solve_min_cost;
use super::PlanError;
use crate::geometry::{Point2, Slot, Vec3};

/// Default slot-match tolerance for star detection, meters.
pub const DEFAULT_STAR_TOLERANCE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormationShape {
    Line,
    Star,
    Circle,
}

impl FormationShape {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Line => "line",
            Self::Star => "star",
            Self::Circle => "circle",
        }
    }
}

impl fmt::Display for FormationShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormationShape {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(Self::Line),
            "star" => Ok(Self::Star),
            "circle" => Ok(Self::Circle),
            other => Err(PlanError::UnsupportedShape(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationPlan {
    pub shape: FormationShape,
    pub center: Point2,
    /// Radians, counter-clockwise from +x.
    pub orientation: f64,
    pub spacing: f64,
    pub slots: Vec<Slot>,
}

fn min_pairwise(points: &[Point2]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.min(points[i].distance(&points[j]));
        }
    }
    best
}

/// Unit-scale star: `ceil(n/2)` points, vertices alternating between
/// radius 1 and 1/2, the odd trailing inner vertex dropped.
fn unit_star(n: usize) -> Vec<Point2> {
    let points = n.div_ceil(2);
    (0..n)
        .map(|j| {
            let angle = j as f64 * PI / points as f64;
            let r = if j % 2 == 0 { 1.0 } else { 0.5 };
            Point2::new(r * angle.cos(), r * angle.sin())
        })
        .collect()
}

/// Slots for a geometric formation around `center`.
///
/// * line: collinear along `orientation`, neighbours `spacing` apart;
/// * circle: neighbouring chord equal to `spacing`;
/// * star: scaled so the closest pair of slots is exactly `spacing` apart.
pub fn plan_drone_formation(
    shape: FormationShape,
    center: Point2,
    orientation: f64,
    spacing: f64,
    n: usize,
    altitude: f64,
) -> Result<FormationPlan, PlanError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(PlanError::InvalidSpacing(spacing));
    }
    if n == 0 {
        return Err(PlanError::InvalidDroneCount);
    }
    if !(altitude >= 0.0 && altitude.is_finite()) {
        return Err(PlanError::InvalidAltitude(altitude));
    }
    let local: Vec<Point2> = match shape {
        FormationShape::Line => (0..n)
            .map(|i| Point2::new((i as f64 - (n as f64 - 1.0) / 2.0) * spacing, 0.0))
            .collect(),
        FormationShape::Circle if n == 1 => vec![Point2::new(0.0, 0.0)],
        FormationShape::Circle => {
            let radius = spacing / (2.0 * (PI / n as f64).sin());
            (0..n)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / n as f64;
                    Point2::new(radius * a.cos(), radius * a.sin())
                })
                .collect()
        }
        FormationShape::Star if n == 1 => vec![Point2::new(0.0, 0.0)],
        FormationShape::Star => {
            let unit = unit_star(n);
            let scale = spacing / min_pairwise(&unit);
            unit.into_iter()
                .map(|p| Point2::new(p.x * scale, p.y * scale))
                .collect()
        }
    };
    let (s, c) = orientation.sin_cos();
    let slots = local
        .into_iter()
        .map(|p| {
            Slot::new(
                center.x + p.x * c - p.y * s,
                center.y + p.x * s + p.y * c,
                altitude,
            )
        })
        .collect();
    Ok(FormationPlan {
        shape,
        center,
        orientation,
        spacing,
        slots,
    })
}

/// True when the positions can be matched one-to-one with the slots with
/// every matched pair within `tol`. Matching uses the minimum-total-distance
/// assignment.
pub fn formation_matches(positions: &[Vec3], slots: &[Slot], tol: f64) -> Result<bool, PlanError> {
    if positions.len() != slots.len() {
        return Err(PlanError::SizeMismatch(positions.len(), slots.len()));
    }
    let dist: Vec<Vec<f64>> = positions
        .iter()
        .map(|p| slots.iter().map(|s| p.distance(&s.as_vec3())).collect())
        .collect();
    let perm = solve_min_cost(&dist);
    Ok(perm.iter().enumerate().all(|(i, &j)| dist[i][j] <= tol))
}

pub fn detect_star(final_positions: &[Vec3], plan: &FormationPlan, tol: f64) -> Result<bool, PlanError> {
    if plan.shape != FormationShape::Star {
        return Err(PlanError::UnsupportedShape(plan.shape.to_string()));
    }
    formation_matches(final_positions, &plan.slots, tol)
}
