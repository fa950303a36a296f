use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    /// Wrong magic, unsupported version or an unparsable text record.
    #[error("format error: {0}")]
    Format(String),

    /// Payload shorter (or longer) than its header declares.
    #[error("corrupt file: {0}")]
    Corruption(String),

    /// Non-finite values or otherwise invalid contents.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid layout: {0}")]
    Layout(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid code: {0}")]
    Code(String),

    #[error("model invariant violated: {0}")]
    Invariant(String),

    #[error("stream alignment: {0}")]
    Alignment(String),

    #[error("unknown token: {0}")]
    Vocabulary(String),

    #[error("training failed: {0}")]
    Training(String),
}

impl Error {
    /// True for errors caused by the filesystem or by an unreadable file, as
    /// opposed to well-formed input that fails validation.
    pub fn is_io_or_format(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Format(_) | Error::Corruption(_))
    }
}
