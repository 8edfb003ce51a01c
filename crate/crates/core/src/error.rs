//! Error types shared across the crate.

use std::fmt;
use std::io;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Shape or length mismatch between operands.
    Dimension(String),
    /// Argument outside an operation's domain (e.g. `m > n`, empty batch).
    Domain(String),
    /// Malformed file content; `offset` is the byte position at which
    /// parsing failed.
    Format {
        path: String,
        offset: u64,
        message: String,
    },
    /// Non-finite value where a finite one is required (divergence etc.).
    Numeric(String),
    Io(io::Error),
}

impl Error {
    pub fn dimension(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(path: impl Into<String>, offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Format {
                path,
                offset,
                message,
            } => write!(f, "format error in {path} at byte {offset}: {message}"),
            Error::Numeric(msg) => write!(f, "numeric error: {msg}"),
            Error::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}
