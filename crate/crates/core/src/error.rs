use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("numeric failure: {msg} (smallest pivot {pivot:e})")]
    Numeric { msg: String, pivot: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Process exit code: 1 for I/O, 2 for validation, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 1,
            Error::Json(e) if e.is_io() => 1,
            Error::Validation(_) | Error::Size(_) | Error::Parse { .. } | Error::Json(_) => 2,
            Error::Numeric { .. } => 3,
        }
    }
}
