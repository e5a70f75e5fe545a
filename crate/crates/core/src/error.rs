use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while loading artifacts or running an analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of an input file could not be parsed. `line` is 1-based.
    #[error("{origin}:{line}: {message}")]
    Parse {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("duplicate id {id:?} on line {line}")]
    DuplicateId { id: String, line: usize },

    #[error("malformed alignment token {token:?}")]
    AlignmentToken { token: String },

    #[error("record {id:?}: {steps} attribution steps for {target_bytes} target bytes")]
    StepCountMismatch {
        id: String,
        steps: usize,
        target_bytes: usize,
    },

    #[error("record {id:?} step {step}: {message}")]
    InvalidStep { id: String, step: usize, message: String },

    #[error("record {id:?} step {step}: source and target norms are all zero")]
    ZeroStep { id: String, step: usize },

    #[error("record {id:?}: word index {index} out of range ({side} has {len} words)")]
    IndexOutOfRange {
        id: String,
        side: &'static str,
        index: usize,
        len: usize,
    },

    #[error("record {id:?}: {side} has {tags} tags for {tokens} tokens")]
    TagLengthMismatch {
        id: String,
        side: &'static str,
        tags: usize,
        tokens: usize,
    },

    #[error("no {what} for record {id:?}")]
    Missing { what: &'static str, id: String },

    #[error("duplicate language ({code}, {script})")]
    DuplicateLanguage { code: String, script: String },

    #[error("unknown language ({code}, {script})")]
    UnknownLanguage { code: String, script: String },

    #[error("score {score} for {key} is outside [0, 100]")]
    ScoreOutOfRange { key: String, score: f64 },

    #[error("{0}")]
    Invalid(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: impl Into<String>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            origin: origin.into(),
            line,
            message: message.to_string(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::Invalid(message.into())
    }

    /// Process exit code for this error: 1 for bad input, 2 for I/O, 3 for a
    /// broken internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Internal(_) => 3,
            _ => 1,
        }
    }
}
