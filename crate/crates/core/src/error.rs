use std::io;

use thiserror::Error;

use crate::corpus::Mention;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid separator sequence at gap {gap}: {reason}")]
    InvalidSequence { gap: usize, reason: String },

    #[error("scheme {scheme} cannot represent overlapping mentions {first} and {second}")]
    Capacity {
        scheme: String,
        first: Mention,
        second: Mention,
    },

    #[error("enumeration bound exceeded: {what} (limit {limit})")]
    BoundExceeded { what: String, limit: usize },

    #[error("empty sentence")]
    EmptySentence,

    #[error("misaligned inputs: {0}")]
    Misaligned(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model format: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
