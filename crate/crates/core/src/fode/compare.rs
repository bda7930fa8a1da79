//! Numerical checks of the scalar ordering results.

use serde::Serialize;

use super::closed_form::{f_value, BlowupEstimate};
use super::l1::ScalarRhs;
use super::{FodeProblem, Trajectory};
use crate::error::{Error, Result};
use crate::fracops::{l1_weights, FracParams};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub nodes_checked: usize,
    /// Largest `(t+delta)^{alpha-1} w(t) - u(t)`; negative when the bound is strict everywhere.
    pub max_violation: f64,
    pub first_violation: Option<usize>,
    pub passed: bool,
}

/// Checks `u(t_k) + tol >= (t_k + delta)^{alpha-1} w(t_k)` at every accepted
/// node with `t_k < t_m`.
pub fn lower_bound_check(traj: &Trajectory, est: &BlowupEstimate, problem: &FodeProblem, tol: f64) -> LowerBoundReport {
    let p = &est.params;
    let mut max_violation = f64::NEG_INFINITY;
    let mut first_violation = None;
    let mut nodes_checked = 0;
    for (k, (&t, &u)) in traj.times().iter().zip(traj.values()).enumerate() {
        let f = f_value(t, p, problem);
        if t >= est.t_m || !(f > 0.0) {
            break;
        }
        let w = f.powf(1.0 / (1.0 - problem.q));
        let bound = (t + p.delta).powf(problem.alpha - 1.0) * w;
        let v = bound - u;
        nodes_checked += 1;
        max_violation = max_violation.max(v);
        if v > tol && first_violation.is_none() {
            first_violation = Some(k);
        }
    }
    LowerBoundReport {
        nodes_checked,
        max_violation,
        first_violation,
        passed: first_violation.is_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Set when a trajectory is not a discrete sub/supersolution (or the data are
    /// not ordered); no ordering verdict is given then.
    pub precondition: Option<String>,
    pub nodes_checked: usize,
    /// Largest `sub - sup` over the checked nodes.
    pub max_excess: f64,
    pub first_violation: Option<usize>,
}

impl ComparisonReport {
    pub fn holds(&self) -> bool {
        self.precondition.is_none() && self.first_violation.is_none()
    }
}

/// Residual slack accepted in the sub/supersolution inequalities, relative to
/// the size of the terms.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Verifies the residual signs `D^a u - f(t,u) <= 0 <= D^a v - f(t,v)` with the
/// L1 operator, then reports the first node where `u > v + tol`.
pub fn comparison_check(
    rhs: &impl ScalarRhs,
    sub: &Trajectory,
    sup: &Trajectory,
    params: &FracParams,
    tol: f64,
) -> Result<ComparisonReport> {
    if sub.grid().fingerprint() != sup.grid().fingerprint() {
        return Err(Error::Precondition("trajectories live on different grids".into()));
    }
    let grid = sub.grid();
    let weights = l1_weights(grid, params)?;
    let n = sub.values().len().min(sup.values().len());
    let (u, v) = (&sub.values()[..n], &sup.values()[..n]);
    let mut report = ComparisonReport {
        precondition: None,
        nodes_checked: n,
        max_excess: f64::NEG_INFINITY,
        first_violation: None,
    };
    if u[0] > v[0] {
        report.precondition = Some(format!("initial data not ordered: {} > {}", u[0], v[0]));
        return Ok(report);
    }
    for k in 1..n {
        let t = grid.nodes()[k];
        for (name, x, sign) in [("sub", u, 1.0), ("sup", v, -1.0)] {
            let d = weights.diag(k) * (x[k] - x[k - 1]) + weights.history(k, x);
            let f = rhs.value(t, x[k]);
            let r = sign * (d - f);
            if r > RESIDUAL_TOL * (1.0 + d.abs() + f.abs()) {
                report.precondition = Some(format!(
                    "{name} residual has the wrong sign at node {k} ({:+.3e})",
                    -sign * r
                ));
                return Ok(report);
            }
        }
    }
    for k in 0..n {
        let e = u[k] - v[k];
        report.max_excess = report.max_excess.max(e);
        if e > tol && report.first_violation.is_none() {
            report.first_violation = Some(k);
        }
    }
    Ok(report)
}
