use thiserror::Error;

/// Errors raised by the metric, model and simulation operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("qualifier violation: {0}")]
    Qualifier(String),

    #[error("out-of-order sample: timestamp {got} precedes {last}")]
    OutOfOrder { last: f64, got: f64 },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("incomparable cost vectors")]
    IncomparableCosts,

    #[error("not enough data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("all fits failed: {0}")]
    AllFitsFailed(String),

    #[error("missing baseline: {0}")]
    MissingBaseline(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
