use thiserror::Error;

/// Crate-wide error type. Numerical refusals are first-class: an operation
/// that cannot certify its contract returns an error instead of a value.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point not on model {model}: {detail}")]
    Domain { model: &'static str, detail: String },

    #[error("field not supported on {model}: {detail}")]
    UnsupportedField { model: &'static str, detail: String },

    #[error("non-compact model without tail assertion: {0}")]
    MissingTail(String),

    #[error("tolerance not attainable: needed {needed}, achieved {achieved}")]
    Tolerance { needed: f64, achieved: f64 },

    #[error("trajectory left the tracked region: {0}")]
    Truncated(String),

    #[error("operation refused: {0}")]
    Refused(String),

    #[error("regularity failure: {0}")]
    Regularity(String),

    #[error("family event between samples: {0}")]
    FamilyEvent(String),

    #[error("endpoint mismatch: distance {distance} exceeds eta {eta}")]
    Mismatch { distance: f64, eta: f64 },

    #[error("no certified candidate: {0}")]
    Infeasible(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
