use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A pointwise quantity was requested where it is undefined (origin, singular axis).
    #[error("domain error: {0}")]
    Domain(String),

    /// Fields or grids with incompatible layouts were combined.
    #[error("shape error: {0}")]
    Shape(String),

    /// The iterative solver stopped before reaching the requested residual.
    #[error("solver did not converge: relative residual {achieved:.3e} after {iterations} iterations (target {target:.1e})")]
    Solver {
        achieved: f64,
        iterations: usize,
        target: f64,
    },

    /// A quadrature or truncation estimate exceeded its tolerance.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// A ratio whose denominator vanished.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    /// Malformed snapshot data.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
