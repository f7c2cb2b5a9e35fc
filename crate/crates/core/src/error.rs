use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("argument outside the certified region: {0}")]
    Region(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("point is numerically at a zero of J (|cos theta| = {cos_abs:e})")]
    NearZeroOfJ { cos_abs: f64 },
    #[error("iteration did not converge: {reason}")]
    NoConvergence { reason: String, trail: Vec<(f64, f64)> },
    #[error("below threshold: {0}")]
    BelowThreshold(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("overflow in {0}")]
    Overflow(String),
    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
