use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The field schema is malformed or a required column is missing.
    #[error("schema error: {0}")]
    Schema(String),

    /// The data violates a dataset invariant (duplicate ids, missing labels).
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// A method or pipeline parameter is out of range.
    #[error("parameter error: {0}")]
    Param(String),

    /// The corruption spec for the synthetic generator is inconsistent.
    #[error("corruption spec error: {0}")]
    Spec(String),

    #[error("rule expression error at column {pos}: {message}")]
    Rule { pos: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad parameters rather than bad input data.
    pub fn is_param_error(&self) -> bool {
        matches!(self, Error::Param(_) | Error::Spec(_) | Error::Rule { .. })
    }
}
