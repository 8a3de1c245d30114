use thiserror::Error;

/// Errors raised by the density, functional and stability routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("window [{lo}, {hi}] captures mass 1 - {missing:.3e}, more than the allowed {allowed:.3e} is missing")]
    WindowTooSmall {
        lo: f64,
        hi: f64,
        missing: f64,
        allowed: f64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("distribution function decreases by {drop:.3e} near x = {x}")]
    NonMonotoneCdf { x: f64, drop: f64 },
    #[error("density is not normalized (mass {0})")]
    NotNormalized(f64),
    #[error("pmf is not log-concave{}", .k.map(|k| format!(" (first violation at k = {k})")).unwrap_or_default())]
    NotLogConcave { k: Option<i64> },
    #[error("support is disconnected: empty cell at {cell} between positive cells")]
    DisconnectedSupport { cell: i64 },
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
