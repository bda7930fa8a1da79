//! Scalar blow-up problem `D^alpha u = u^q`, `u(0) = u0`.
//!
//! [`closed_form`] holds the explicit subsolution and its blow-up time,
//! [`volterra`] integrates the equivalent integral equation, [`l1`] steps the
//! differential form with the L1 scheme and [`compare`] checks orderings.

pub mod closed_form;
pub mod compare;
pub mod l1;
pub mod volterra;

pub use closed_form::{
    blowup_time, choose_delta, classify_case, subsolution_w, BlowupEstimate, CaseTag, SubsolutionParams, CASE_TOLERANCE,
};
pub use compare::{comparison_check, lower_bound_check, ComparisonReport, LowerBoundReport};
pub use l1::{l1_solve, l1_solve_power, FnRhs, ScalarRhs};
pub use volterra::{volterra_solve, DEFAULT_DIVERGENCE_THRESHOLD};

use crate::error::{Error, Result};
use crate::fracops::TimeGrid;

/// `D^alpha u = u^q` with `u(0) = u0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FodeProblem {
    pub alpha: f64,
    pub q: f64,
    pub u0: f64,
}

impl FodeProblem {
    pub fn new(alpha: f64, q: f64, u0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::param("q", format!("must exceed 1, got {q}")));
        }
        if !(u0 > 0.0 && u0.is_finite()) {
            return Err(Error::param("u0", format!("must be positive, got {u0}")));
        }
        Ok(Self { alpha, q, u0 })
    }

    /// `1 - q (1 - alpha)`, whose sign selects the case.
    pub fn exponent(&self) -> f64 {
        1.0 - self.q * (1.0 - self.alpha)
    }
}

/// Node values of a time-stepping run, truncated at the first divergent node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    values: Vec<f64>,
    blowup_index: Option<usize>,
}

impl Trajectory {
    pub(crate) fn new(grid: TimeGrid, values: Vec<f64>, blowup_index: Option<usize>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self {
            grid,
            values,
            blowup_index,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Accepted values `u(t_0), u(t_1), ...`; all finite.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> &[f64] {
        &self.grid.nodes()[..self.values.len()]
    }

    pub fn blowup_flag(&self) -> bool {
        self.blowup_index.is_some()
    }

    /// First node at which the solver diverged.
    pub fn blowup_index(&self) -> Option<usize> {
        self.blowup_index
    }

    pub fn blowup_time(&self) -> Option<f64> {
        self.blowup_index.map(|k| self.grid.nodes()[k])
    }
}
