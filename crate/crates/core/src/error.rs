use std::io;

use thiserror::Error;

/// Errors raised by the segmix core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sentence {sentence}, position {position}: {message}")]
    Bio {
        sentence: usize,
        position: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty segment pool")]
    EmptyPool,

    #[error("no eligible segment in example {0}")]
    NoEligibleSegment(usize),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
