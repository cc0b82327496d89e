use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed arguments: bad mode index, mismatched dimensions, invalid matrices.
    #[error("invalid input: {0}")]
    Input(String),

    /// A parameter lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("unsupported dimension {found}: {what} requires n = {expected}")]
    UnsupportedDimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("value iteration did not converge after {iterations} sweeps (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("angular contraction factor {gamma} >= 1; pass a finite-horizon override to iterate anyway")]
    Stability { gamma: f64 },

    #[error("structural error: {0}")]
    Structural(String),

    /// The two-mode rotation construction does not behave as expected (sign
    /// change missing), usually because rho or alpha leave the proven regime.
    #[error("construction violated: {0}")]
    ConstructionViolated(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
