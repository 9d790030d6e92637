use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input violates an operation precondition (bad order, bad grid, V <= 0, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("grid too large for direct summation ({points} points > {limit}); use the padded convolution solver")]
    GridTooLarge { points: usize, limit: usize },

    #[error("field file format error at byte offset {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("quadrature did not reach tolerance {tolerance:e}: estimate {estimate} (error bound {error:e})")]
    Quadrature { estimate: f64, error: f64, tolerance: f64 },

    #[error("{solver} did not converge in {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        best_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("resource error: {0}")]
    Resource(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
