//! Ordering check between two discrete trajectories of the truncated problem.

use serde::Serialize;

use super::solver::PdeProblem;
use crate::error::{Error, Result};

/// Residual slack, relative to `1 + |largest term|` at each step.
pub const PDE_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeComparisonReport {
    /// Set when an input is not a discrete sub/supersolution, the data are not
    /// ordered, or the potential is unbounded; no ordering verdict then.
    pub precondition: Option<String>,
    pub steps_checked: usize,
    /// Largest `sub - sup` over all checked space-time nodes.
    pub max_excess: f64,
    /// First `(step, node)` with `sub > sup + tol`.
    pub first_violation: Option<(usize, usize)>,
}

impl PdeComparisonReport {
    pub fn holds(&self) -> bool {
        self.precondition.is_none() && self.first_violation.is_none()
    }
}

/// Checks the residual signs `R(sub) <= 0 <= R(sup)` with the scheme's
/// operators, then scans for `sub > sup + tol` on the common steps.
pub fn pde_comparison_check(
    sub: &[Vec<f64>],
    sup: &[Vec<f64>],
    problem: &PdeProblem,
    tol: f64,
) -> Result<PdeComparisonReport> {
    if sub.is_empty() || sup.is_empty() {
        return Err(Error::Precondition("empty trajectory".into()));
    }
    let n = sub.len().min(sup.len());
    let (sub, sup) = (&sub[..n], &sup[..n]);
    let mut report = PdeComparisonReport {
        precondition: None,
        steps_checked: n,
        max_excess: f64::NEG_INFINITY,
        first_violation: None,
    };
    if !problem.truncation.is_finite() {
        report.precondition = Some("comparison needs a bounded (truncated) potential".into());
        return Ok(report);
    }
    for (a, b) in [(sub, "sub"), (sup, "sup")].iter().map(|(s, name)| (s[0].len(), *name)) {
        if a != problem.grid.len() {
            return Err(Error::Precondition(format!(
                "{b} has {a} nodes, grid has {}",
                problem.grid.len()
            )));
        }
    }
    if let Some(j) = (0..problem.grid.len()).find(|&j| sub[0][j] > sup[0][j]) {
        report.precondition = Some(format!(
            "initial data not ordered at node {j}: {:e} > {:e}",
            sub[0][j], sup[0][j]
        ));
        return Ok(report);
    }
    for (name, states, sign) in [("sub", sub, 1.0), ("sup", sup, -1.0)] {
        for (k, (r, scale)) in problem.scaled_residuals(states)?.iter().enumerate() {
            let allowed = PDE_RESIDUAL_TOL * (1.0 + scale);
            if let Some(j) = r.iter().position(|v| sign * v > allowed) {
                report.precondition = Some(format!(
                    "{name} residual has the wrong sign at step {}, node {j} ({:+.3e})",
                    k + 1,
                    r[j]
                ));
                return Ok(report);
            }
        }
    }
    for (k, (u, v)) in sub.iter().zip(sup).enumerate() {
        for (j, (a, b)) in u.iter().zip(v).enumerate() {
            let e = a - b;
            report.max_excess = report.max_excess.max(e);
            if e > tol && report.first_violation.is_none() {
                report.first_violation = Some((k, j));
            }
        }
    }
    Ok(report)
}
