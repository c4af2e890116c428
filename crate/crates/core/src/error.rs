use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degree out of range: {0}")]
    Degree(String),

    #[error("Young condition violated: exponent sum {0} <= 1")]
    YoungCondition(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("on-curve ambiguity: point ({0}, {1}) lies within the guard band")]
    OnCurve(f64, f64),

    #[error("internal fault: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the command line frontend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Json(_) => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::Degree(_) => "degree",
            Error::YoungCondition(_) => "young_condition",
            Error::Precondition(_) => "precondition",
            Error::OnCurve(..) => "on_curve",
            Error::Internal(_) => "internal",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
