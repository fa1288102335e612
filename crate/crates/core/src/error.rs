use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("LP is unbounded")]
    Unbounded,
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("sweep aborted: {0}")]
    Runaway(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
