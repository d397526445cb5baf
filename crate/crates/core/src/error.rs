//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("vocabulary error: {0}")]
    Vocab(String),

    #[error("symbol id {id} out of vocabulary range (size {size})")]
    IdOutOfRange { id: usize, size: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training diverged at epoch {epoch}: {msg}")]
    Diverged { epoch: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
