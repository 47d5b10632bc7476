//! Yosida-type trajectories `λ ↦ (x_λ, λ⁻¹z*_λ)` as `λ ↓ 0`.

use serde::Serialize;

use super::MonotoneOperator;
use crate::error::{Error, Result};
use crate::geometry::NormedSpace;
use crate::vector::Vector;

/// Default slack on the per-step displacement bound.
pub const BOUND_SLACK: f64 = 1e-6;
/// Default tolerance for `‖λ⁻¹z* - A°x‖_q` at the smallest `λ`.
pub const TRAJECTORY_TOL: f64 = 1e-3;

/// `λ_k = 2^-k`, `k = 1..=20`.
pub fn default_lambda_schedule() -> Vec<f64> {
    (1..=20).map(|k| 0.5f64.powi(k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub lambda: f64,
    pub x_lambda: Vector,
    /// `λ⁻¹z*`, an element of `A x_λ`.
    pub yosida_value: Vector,
    pub primal_residual: f64,
    /// `‖λ⁻¹z*‖_q`, which equals `λ⁻¹‖x - x_λ‖_p`.
    pub norm_yosida: f64,
    /// Upper bound on `λ⁻¹‖x - x_λ‖_p` in terms of `‖A°x‖`; only for `λ < 1`.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
    pub target_x: Vector,
    pub limit_selection: Vector,
    pub limit_norm: f64,
    /// `‖λ⁻¹z* - A°x‖_q` at the last record.
    pub terminal_error: f64,
}

impl Trajectory {
    /// Largest `norm_yosida - bound` over the records that carry a bound.
    pub fn max_bound_excess(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.bound.map(|b| r.norm_yosida - b))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn bounds_hold(&self, slack: f64) -> bool {
        self.max_bound_excess() <= slack
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.terminal_error <= tol
    }
}

/// `(a + √(a² + 4λ(1-λ³))) / (2(1-λ³))` for `0 < λ < 1`.
pub fn displacement_bound(selection_norm: f64, lambda: f64) -> Option<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return None;
    }
    let a = selection_norm;
    let c = 1.0 - lambda.powi(3);
    Some((a + (a * a + 4.0 * lambda * c).sqrt()) / (2.0 * c))
}

impl MonotoneOperator {
    /// One exact resolvent per `λ` of a strictly decreasing schedule.
    pub fn yosida_trajectory(&self, x: &Vector, schedule: &[f64], space: &NormedSpace) -> Result<Trajectory> {
        if schedule.is_empty() {
            return Err(Error::InvalidInput("empty lambda schedule".into()));
        }
        if schedule.iter().any(|&l| !(l > 0.0 && l.is_finite())) || schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("lambda schedule must be positive and strictly decreasing".into()));
        }
        let limit_selection = self.min_norm_selection(x, space)?;
        let limit_norm = space.dual_norm(&limit_selection)?;
        let records = schedule
            .iter()
            .map(|&lambda| {
                let s = self.resolvent_solve(x, lambda, space)?;
                let yosida_value = s.zstar.scale(1.0 / lambda);
                Ok(TrajectoryRecord {
                    lambda,
                    norm_yosida: space.dual_norm(&yosida_value)?,
                    yosida_value,
                    x_lambda: s.x_lambda,
                    primal_residual: s.residual,
                    bound: displacement_bound(limit_norm, lambda),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let last = &records[records.len() - 1].yosida_value;
        let terminal_error = space.dual_norm(&(last - &limit_selection))?;
        Ok(Trajectory { records, target_x: x.clone(), limit_selection, limit_norm, terminal_error })
    }
}
