use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum NvError {
    /// A grid was requested with parameters that violate its invariants.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two fields that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An iterative solve did not reach its tolerance.
    #[error("no convergence in {context}: {iterations} iterations, relative residual {residual:.3e}")]
    NonConvergence {
        context: String,
        iterations: usize,
        residual: f64,
    },

    /// A field or config file could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, NvError>;
