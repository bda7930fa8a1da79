//! Separable subsolution `T(t) X(r)` above the Hardy threshold.
//!
//! With `-Delta_p X - mu W_N X^{p-1} = -X` and `D^alpha T = T^{p-1}`, the
//! product satisfies the equation exactly by degree `p-1` homogeneity of the
//! p-Laplacian. `T` comes from the same L1 scheme as the PDE run, so the
//! discrete residual of `T X` only carries the profile residual.

use serde::Serialize;

use super::solver::PdeProblem;
use crate::error::{Error, Result};
use crate::fode::{blowup_time, l1_solve_power, BlowupEstimate, FodeProblem, Trajectory, DEFAULT_DIVERGENCE_THRESHOLD};
use crate::fracops::FracParams;

#[derive(Debug, Clone)]
pub struct SeparableSubsolution {
    pub eps_scale: f64,
    pub profile: Vec<f64>,
    /// `T` on the problem's time grid, `T(0) = eps_scale`.
    pub time_factor: Trajectory,
    /// Closed-form blow-up time of the scalar problem with `q = p - 1`.
    pub estimate: BlowupEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualScan {
    pub steps_checked: usize,
    /// Largest residual relative to `1 + |largest term|` at its step; a
    /// subsolution needs this `<= tol`. `None` when no step was checked.
    pub max_residual: Option<f64>,
    pub first_violation: Option<usize>,
    pub passed: bool,
}

/// `eps = min_j u0_j / X_j / 2`, which keeps `eps X < u0` strictly.
pub fn auto_eps_scale(u0: &[f64], x_profile: &[f64]) -> Result<f64> {
    if u0.len() != x_profile.len() {
        return Err(Error::Shape {
            expected: x_profile.len(),
            got: u0.len(),
        });
    }
    let ratio = u0
        .iter()
        .zip(x_profile)
        .map(|(u, x)| u / x)
        .fold(f64::INFINITY, f64::min);
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::Precondition(format!(
            "u0 / X must be positive and finite at every node, minimum is {ratio:e}"
        )));
    }
    Ok(0.5 * ratio)
}

pub fn separable_subsolution(problem: &PdeProblem, x_profile: &[f64], eps_scale: f64) -> Result<SeparableSubsolution> {
    problem.grid.check(x_profile)?;
    if !(eps_scale > 0.0) {
        return Err(Error::param("eps_scale", format!("must be positive, got {eps_scale}")));
    }
    if let Some(j) = x_profile.iter().position(|x| !(*x > 0.0)) {
        return Err(Error::Precondition(format!("profile not positive at node {j}")));
    }
    for (j, (x, u)) in x_profile.iter().zip(&problem.u0).enumerate() {
        if eps_scale * x >= *u {
            return Err(Error::Precondition(format!(
                "eps X >= u0 at node {j} (r = {:.6}): {:.6e} >= {:.6e}",
                problem.grid.nodes()[j],
                eps_scale * x,
                u
            )));
        }
    }
    let q = problem.spec.p - 1.0;
    let params = FracParams::new(problem.alpha)?;
    let time_factor = l1_solve_power(q, eps_scale, &problem.time, &params, DEFAULT_DIVERGENCE_THRESHOLD)?;
    let estimate = blowup_time(&FodeProblem::new(problem.alpha, q, eps_scale)?);
    Ok(SeparableSubsolution {
        eps_scale,
        profile: x_profile.to_vec(),
        time_factor,
        estimate,
    })
}

impl SeparableSubsolution {
    /// `T(t_k) X` for every accepted node of `T`.
    pub fn states(&self) -> Vec<Vec<f64>> {
        self.time_factor
            .values()
            .iter()
            .map(|t| self.profile.iter().map(|x| t * x).collect())
            .collect()
    }

    /// Scans `D^alpha(TX) - Delta_p(TX) - mu W_N (TX)^{p-1}` over the first
    /// `steps + 1` nodes (all accepted nodes when `None`).
    pub fn residual_scan(&self, problem: &PdeProblem, steps: Option<usize>, tol: f64) -> Result<ResidualScan> {
        let mut states = self.states();
        if let Some(s) = steps {
            states.truncate(s + 1);
        }
        let res = problem.scaled_residuals(&states)?;
        let mut scan = ResidualScan {
            steps_checked: res.len(),
            max_residual: None,
            first_violation: None,
            passed: true,
        };
        for (k, (r, scale)) in res.iter().enumerate() {
            let worst = r.iter().fold(f64::NEG_INFINITY, |s, v| s.max(*v)) / (1.0 + scale);
            scan.max_residual = Some(scan.max_residual.map_or(worst, |m: f64| m.max(worst)));
            if worst > tol && scan.first_violation.is_none() {
                scan.first_violation = Some(k + 1);
                scan.passed = false;
            }
        }
        Ok(scan)
    }
}
