//! Radially symmetric time-fractional p-Laplacian with the singular potential.

pub mod compare;
pub mod eigen;
pub mod grid;
pub mod solver;
pub mod subsolution;
pub mod tridiag;

pub use compare::{pde_comparison_check, PdeComparisonReport, PDE_RESIDUAL_TOL};
pub use eigen::{eigen_first, eigen_first_with, positive_profile_x, rayleigh_quotient, EigenControl, EigenResult};
pub use grid::{p_laplacian_radial, RadialGrid};
pub use solver::{
    blowup_detect, solve, step, BlowupCause, BlowupThresholds, BlowupVerdict, PdeProblem, PdeState, RunReport,
    StepControl, StepOutcome, StepRecord,
};
pub use subsolution::{auto_eps_scale, separable_subsolution, ResidualScan, SeparableSubsolution};
