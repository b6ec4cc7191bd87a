use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument was outside the documented domain of an operation.
    #[error("{0}")]
    Domain(String),

    /// A text input (CSV sample, polyline file, CLI spec string) was malformed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand for a domain error with a formatted message.
pub fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub fn parse(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}
