use thiserror::Error;

/// Errors raised while building, transforming or analysing instances.
#[derive(Debug, Error)]
pub enum GlhError {
    /// Input violates a documented precondition or type invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A configured size limit would be exceeded.
    #[error("capacity exceeded: {what} needs {needed}, limit is {limit}")]
    Capacity {
        what: String,
        needed: u128,
        limit: u128,
    },

    /// An iterative eigensolver ran out of iterations.
    #[error("eigensolver did not converge after {iterations} iterations (worst residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A spectral gap needed by a check is absent.
    #[error("gap precondition violated: {0}")]
    GapPrecondition(String),

    /// The requested level cannot be separated from its neighbours.
    #[error("unresolvable degeneracy: {0}")]
    Degeneracy(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, GlhError>;

pub(crate) fn invalid(msg: impl Into<String>) -> GlhError {
    GlhError::Validation(msg.into())
}
