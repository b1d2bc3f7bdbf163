use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::geometry::{Region, Slot};
use crate::sim::DroneState;

/// Downward camera with a full-angle field of view in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fov: f64,
}

impl CameraModel {
    pub fn new(fov: f64) -> Result<Self, PlanError> {
        if !(fov > 0.0 && fov < std::f64::consts::PI) {
            return Err(PlanError::InvalidFov(fov));
        }
        Ok(Self { fov })
    }

    pub fn from_degrees(deg: f64) -> Result<Self, PlanError> {
        Self::new(deg.to_radians())
    }

    fn half_tan(&self) -> f64 {
        (self.fov / 2.0).tan()
    }
}

/// Ground radius seen from altitude `h`: `h * tan(fov / 2)`.
pub fn footprint_radius(h: f64, fov: f64) -> Result<f64, PlanError> {
    let camera = CameraModel::new(fov)?;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(PlanError::InvalidAltitude(h));
    }
    Ok(h * camera.half_tan())
}

/// Sum of footprint disc areas over the region area. Overlaps are counted
/// once per drone, so the ratio is an upper bound on true coverage and may
/// exceed 1.
pub fn coverage_ratio(altitudes: &[f64], camera: CameraModel, region: &Region) -> f64 {
    let t = camera.half_tan();
    let discs: f64 = altitudes
        .iter()
        .map(|h| {
            let r = h.max(0.0) * t;
            std::f64::consts::PI * r * r
        })
        .sum();
    discs / region.area()
}

/// Coverage ratio over the airborne drones of a snapshot.
pub fn coverage_ratio_of_drones(drones: &[DroneState], camera: CameraModel, region: &Region) -> f64 {
    let alts: Vec<f64> = drones
        .iter()
        .filter(|d| d.airborne)
        .map(|d| d.position.z)
        .collect();
    coverage_ratio(&alts, camera, region)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePlan {
    pub rows: usize,
    pub cols: usize,
    pub cell_w: f64,
    pub cell_h: f64,
    pub r_cell: f64,
    pub altitude: f64,
    pub clamped: bool,
    pub slots: Vec<Slot>,
}

/// Picks the near-square grid for `n` drones.
///
/// Candidates are `(rows, cols)` with `rows * cols >= n` and fewer surplus
/// cells than `min(rows, cols)`. The winner minimises `|cell_w / cell_h - 1|`;
/// ties prefer fewer cells, then fewer rows.
pub fn choose_grid(region: &Region, n: usize) -> (usize, usize) {
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for rows in 1..=n {
        let mut cols = n.div_ceil(rows);
        loop {
            let cells = rows * cols;
            if cells - n >= rows.min(cols) {
                break;
            }
            let cell_w = region.width / cols as f64;
            let cell_h = region.height / rows as f64;
            let score = (cell_w / cell_h - 1.0).abs();
            let better = match best {
                None => true,
                Some((s, c, r, _)) => {
                    let tol = 1e-12 * s.max(score).max(1.0);
                    if (score - s).abs() <= tol {
                        (cells, rows) < (c, r)
                    } else {
                        score < s
                    }
                }
            };
            if better {
                best = Some((score, cells, rows, cols));
            }
            cols += 1;
        }
    }
    let (_, _, rows, cols) = best.expect("rows = 1, cols = n is always a candidate");
    (rows, cols)
}

/// Grid coverage plan: one cell centre per drone, row-major from the region
/// origin, all at the altitude whose footprint radius equals the cell
/// half-diagonal (clamped to the bounds).
pub fn plan_area_coverage(
    region: &Region,
    n: usize,
    camera: CameraModel,
    alt_min: f64,
    alt_max: f64,
) -> Result<CoveragePlan, PlanError> {
    if !region.is_valid() {
        return Err(PlanError::InvalidRegion);
    }
    if n == 0 {
        return Err(PlanError::InvalidDroneCount);
    }
    if !(alt_min > 0.0 && alt_min <= alt_max && alt_max.is_finite()) {
        return Err(PlanError::InvalidAltitudeBounds(alt_min, alt_max));
    }
    CameraModel::new(camera.fov)?;

    let (rows, cols) = choose_grid(region, n);
    let cell_w = region.width / cols as f64;
    let cell_h = region.height / rows as f64;
    let r_cell = cell_w.hypot(cell_h) / 2.0;
    let raw = r_cell / camera.half_tan();
    let altitude = raw.clamp(alt_min, alt_max);
    let clamped = altitude != raw;

    let slots = (0..n)
        .map(|k| {
            let (r, c) = (k / cols, k % cols);
            Slot::new(
                region.origin.x + (c as f64 + 0.5) * cell_w,
                region.origin.y + (r as f64 + 0.5) * cell_h,
                altitude,
            )
        })
        .collect();

    Ok(CoveragePlan {
        rows,
        cols,
        cell_w,
        cell_h,
        r_cell,
        altitude,
        clamped,
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use approx::assert_relative_eq;

    fn field() -> Region {
        Region::new(Point2::new(0.0, 0.0), 400.0, 300.0)
    }

    #[test]
    fn footprint_examples() {
        let q = std::f64::consts::FRAC_PI_2;
        assert_relative_eq!(footprint_radius(50.0, q).unwrap(), 50.0, max_relative = 1e-15);
        assert_eq!(footprint_radius(0.0, q).unwrap(), 0.0);
        // 30 * tan(30 deg) = 10 * sqrt(3)
        assert_relative_eq!(
            footprint_radius(30.0, 60f64.to_radians()).unwrap(),
            10.0 * 3f64.sqrt(),
            max_relative = 1e-14
        );
        assert!(matches!(
            footprint_radius(10.0, std::f64::consts::PI),
            Err(PlanError::InvalidFov(_))
        ));
        assert!(footprint_radius(-1.0, q).is_err());
    }

    #[test]
    fn single_drone_ratio() {
        let cam = CameraModel::from_degrees(90.0).unwrap();
        assert_eq!(coverage_ratio(&[], cam, &field()), 0.0);
        let r = coverage_ratio(&[50.0], cam, &field());
        assert_relative_eq!(r, std::f64::consts::PI * 2500.0 / 120000.0, max_relative = 1e-12);
        assert_relative_eq!(r, 0.06545, epsilon = 1e-5);
    }

    #[test]
    fn one_drone_plan_is_clamped_at_centre() {
        let cam = CameraModel::from_degrees(90.0).unwrap();
        let p = plan_area_coverage(&field(), 1, cam, 10.0, 120.0).unwrap();
        assert_eq!((p.rows, p.cols), (1, 1));
        assert_eq!(p.r_cell, 250.0);
        assert_eq!(p.altitude, 120.0);
        assert!(p.clamped);
        assert_eq!(p.slots, vec![Slot::new(200.0, 150.0, 120.0)]);
    }

    #[test]
    fn twelve_drones_get_square_cells() {
        let cam = CameraModel::from_degrees(90.0).unwrap();
        let p = plan_area_coverage(&field(), 12, cam, 10.0, 120.0).unwrap();
        assert_eq!((p.rows, p.cols), (3, 4));
        assert_eq!((p.cell_w, p.cell_h), (100.0, 100.0));
        assert_relative_eq!(p.r_cell, 20000f64.sqrt() / 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.altitude, 70.71067811865476, max_relative = 1e-12);
        assert!(!p.clamped);
    }

    #[test]
    fn ten_drones_use_surplus_grid() {
        let cam = CameraModel::from_degrees(90.0).unwrap();
        let p = plan_area_coverage(&field(), 10, cam, 10.0, 120.0).unwrap();
        assert_eq!((p.rows, p.cols), (3, 4));
        assert_eq!(p.slots.len(), 10);
        assert_eq!(p.slots[9], Slot::new(150.0, 250.0, p.altitude));
    }

    #[test]
    fn plan_errors() {
        let cam = CameraModel::from_degrees(90.0).unwrap();
        let bad = Region::new(Point2::new(0.0, 0.0), 0.0, 10.0);
        assert_eq!(
            plan_area_coverage(&bad, 1, cam, 10.0, 20.0),
            Err(PlanError::InvalidRegion)
        );
        assert!(matches!(
            plan_area_coverage(&field(), 1, cam, 30.0, 20.0),
            Err(PlanError::InvalidAltitudeBounds(..))
        ));
        assert!(matches!(
            plan_area_coverage(&field(), 1, cam, 0.0, 20.0),
            Err(PlanError::InvalidAltitudeBounds(..))
        ));
        assert_eq!(
            plan_area_coverage(&field(), 0, cam, 10.0, 20.0),
            Err(PlanError::InvalidDroneCount)
        );
    }
}
