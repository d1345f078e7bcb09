use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("validation failed for {id}: {message}")]
    Validation { id: String, message: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sequence for {id} has {len} positions, exceeding the limit of {limit}")]
    SequenceOverflow { id: String, len: usize, limit: usize },

    #[error("predictor error: {0}")]
    Predictor(String),

    #[error("generated set is missing MCQs: {}", .0.join(", "))]
    MissingMcqs(Vec<String>),

    #[error("statistics error: {0}")]
    Statistics(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(id: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            id: id.into(),
            message: message.into(),
        }
    }
}
