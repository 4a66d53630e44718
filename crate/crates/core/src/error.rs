use thiserror::Error;

/// Errors raised by the statistics, constructions and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} = {value} is outside {expected}")]
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("assumption {assumption} violated: {detail}")]
    Validation { assumption: String, detail: String },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("empty sample")]
    EmptySample,

    #[error("1 + f is negative at {} grid point(s) (min {min:.6e} at t = {argmin:.6}); violating t: {violating:?}", violating.len())]
    NegativeDensity {
        min: f64,
        argmin: f64,
        violating: Vec<f64>,
    },

    #[error("empty set descriptor")]
    EmptyDescriptor,

    #[error("unknown suite `{name}`; available: {available}")]
    UnknownSuite { name: String, available: String },

    #[error("{path}: {source}")]
    Config {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn validation(assumption: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Validation {
            assumption: assumption.into(),
            detail: detail.into(),
        }
    }
}
