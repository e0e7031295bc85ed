use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("malformed JSON (line {line}): {message}")]
    Parse { line: usize, message: String },

    /// A record violates a domain invariant. `line` is 1-based when the record
    /// came from a file.
    #[error("{message}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invariant {
        field: &'static str,
        message: String,
        line: Option<usize>,
    },

    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("{0}")]
    Config(String),

    #[error("empty sample")]
    EmptySample,

    #[error("{0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("token index {index} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { index: u32, vocab_size: usize },

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Diverged { epoch: usize, batch: usize, loss: f64 },

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(field: &'static str, message: impl Into<String>) -> Self {
        Error::Invariant {
            field,
            message: message.into(),
            line: None,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a 1-based source line to invariant and parse errors.
    pub(crate) fn at_line(self, line: usize) -> Self {
        match self {
            Error::Invariant { field, message, .. } => Error::Invariant {
                field,
                message,
                line: Some(line),
            },
            Error::Parse { message, .. } => Error::Parse { line, message },
            other => other,
        }
    }
}
