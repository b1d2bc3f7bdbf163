//! Exact drone-to-slot assignment.
//!
//! A dense O(n^3) Hungarian solve gives an optimal matching together with
//! feasible dual potentials. Every optimal matching uses only tight edges
//! (zero reduced cost), so the lexicographically smallest optimum is found
//! by fixing rows in order and rotating the current matching along
//! alternating cycles of tight edges.

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::geometry::Vec3;

pub const MAX_ASSIGNMENT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Maximize,
    Minimize,
}

impl std::str::FromStr for Objective {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maximize" => Ok(Self::Maximize),
            "minimize" => Ok(Self::Minimize),
            other => Err(PlanError::InvalidObjective(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentResult {
    /// `permutation[i]` is the slot assigned to drone `i`.
    pub permutation: Vec<usize>,
    pub total_displacement: f64,
    pub objective: Objective,
}

/// Minimum-cost perfect matching on a square matrix, breaking ties by the
/// lexicographically smallest row-to-column permutation.
pub fn solve_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    debug_assert!(cost.iter().all(|row| row.len() == n));

    let (row_to_col, u, v) = hungarian(cost);
    let scale = cost
        .iter()
        .flatten()
        .fold(1.0_f64, |m, c| m.max(c.abs()));
    let eps = 1e-9 * scale;
    let tight = |i: usize, j: usize| (cost[i][j] - u[i] - v[j]).abs() <= eps;
    lexicographic_matching(n, row_to_col, tight)
}

/// Returns (assignment, row potentials, column potentials).
fn hungarian(cost: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    (assignment, u[1..].to_vec(), v[1..].to_vec())
}

fn lexicographic_matching(
    n: usize,
    mut row_to_col: Vec<usize>,
    tight: impl Fn(usize, usize) -> bool,
) -> Vec<usize> {
    let mut col_to_row = vec![0usize; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut col_locked = vec![false; n];

    for i in 0..n {
        let freed = row_to_col[i];
        for j in 0..n {
            if col_locked[j] || !tight(i, j) {
                continue;
            }
            if j == freed {
                break;
            }
            // Rematch the row holding j so that some chain ends on `freed`.
            let start = col_to_row[j];
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut path = Vec::new();
            if reroute(start, freed, &tight, &col_locked, &col_to_row, &mut visited, &mut path) {
                for &(r, c) in &path {
                    row_to_col[r] = c;
                    col_to_row[c] = r;
                }
                row_to_col[i] = j;
                col_to_row[j] = i;
                break;
            }
        }
        col_locked[row_to_col[i]] = true;
    }
    row_to_col
}

fn reroute(
    row: usize,
    target: usize,
    tight: &impl Fn(usize, usize) -> bool,
    col_locked: &[bool],
    col_to_row: &[usize],
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for s in 0..col_locked.len() {
        if col_locked[s] || visited[s] || !tight(row, s) {
            continue;
        }
        visited[s] = true;
        if s == target {
            path.push((row, s));
            return true;
        }
        if reroute(col_to_row[s], target, tight, col_locked, col_to_row, visited, path) {
            path.push((row, s));
            return true;
        }
    }
    false
}

/// Assigns each position to a distinct slot, extremising the total
/// Euclidean displacement.
pub fn assign_slots(
    positions: &[Vec3],
    slots: &[Vec3],
    objective: Objective,
) -> Result<AssignmentResult, PlanError> {
    if positions.len() != slots.len() {
        return Err(PlanError::SizeMismatch(positions.len(), slots.len()));
    }
    if positions.len() > MAX_ASSIGNMENT {
        return Err(PlanError::TooManyDrones(positions.len()));
    }
    let dist: Vec<Vec<f64>> = positions
        .iter()
        .map(|p| slots.iter().map(|s| p.distance(s)).collect())
        .collect();
    let cost: Vec<Vec<f64>> = match objective {
        Objective::Minimize => dist.clone(),
        Objective::Maximize => dist.iter().map(|r| r.iter().map(|d| -d).collect()).collect(),
    };
    let permutation = solve_min_cost(&cost);
    let total_displacement = permutation
        .iter()
        .enumerate()
        .map(|(i, &j)| dist[i][j])
        .sum();
    Ok(AssignmentResult {
        permutation,
        total_displacement,
        objective,
    })
}
