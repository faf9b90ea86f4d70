use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("times not strictly increasing at line {line}")]
    NonMonotoneTimes { line: u64 },

    #[error("negative value at line {line}")]
    NegativeValue { line: u64 },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("window contains no incidence observations")]
    EmptyWindow,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no feasible grid cell satisfies the shape/mode constraints")]
    EmptyFeasibleRegion,

    #[error("length mismatch: {predicted} predictions vs {observed} observations")]
    LengthMismatch { predicted: usize, observed: usize },

    #[error("series share no common time stamps")]
    NoCommonGrid,

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Short failure-class name used in single-line CLI diagnostics.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } | Error::Json(_) => "io",
            Error::MalformedRow { .. }
            | Error::NonMonotoneTimes { .. }
            | Error::NegativeValue { .. }
            | Error::InvalidSeries(_) => "parse",
            Error::EmptyWindow | Error::InvalidParameter(_) | Error::LengthMismatch { .. } => {
                "validation"
            }
            Error::EmptyFeasibleRegion => "empty-feasible-region",
            Error::NoCommonGrid => "no-common-grid",
        }
    }
}
