use std::io;
use std::path::Path;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants map onto distinct failure classes so the
/// CLI can report distinct exit codes for parse, validation, numeric, and
/// I/O failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input data; carries the source location.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Structurally well-formed input that violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// Non-finite values or other numeric breakdowns.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Inconsistent or unusable configuration.
    #[error("config error: {0}")]
    Config(String),

    /// An instance window that does not fit in `max_len`. Kept as its own
    /// variant so callers can choose between skipping and aborting.
    #[error("window of {len} tokens exceeds max_len {max_len}")]
    OversizedWindow { len: usize, max_len: usize },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub fn parse(path: impl AsRef<Path>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
