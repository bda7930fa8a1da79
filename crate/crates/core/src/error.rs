use thiserror::Error;

/// Errors raised by the numerical routines and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("invalid parameter {name}: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// Two inputs that must be aligned have different lengths.
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },

    /// A function was evaluated outside its domain of definition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested quantity is not defined in the current parameter regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// An iterative method stopped without meeting its tolerance.
    #[error("{method} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// A time-stepping solver failed at a node below the divergence threshold.
    #[error("solver failure at node {node}: {reason}")]
    Solver { node: usize, reason: String },

    /// A precondition of a verification harness is not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Malformed configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
