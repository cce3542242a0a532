use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input that violates a type invariant (bad domain, malformed mesh, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Argument outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operation called on data it does not support, e.g. a non-tangential polygon.
    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(
        "linear solver did not converge after {iterations} iterations (relative residual {residual:.3e}): {reason}"
    )]
    Solver {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("finite-difference estimate not converged: coarse {coarse:.6e}, fine {fine:.6e}")]
    FiniteDifference { coarse: f64, fine: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
