use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Malformed input: bad index, wrong length, overlapping groups, ...
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller broke an operation's precondition (e.g. empty string set).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The input is well-formed but too large for exhaustive treatment.
    #[error("out of scope: {0}")]
    Scope(String),

    /// The input is well-formed but deliberately not handled.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A neighbor oracle or graph failed a structural consistency check.
    #[error("integrity error: {0}")]
    Integrity(String),

    /// Missing or inconsistent run configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn scope(msg: impl Into<String>) -> Self {
        Error::Scope(msg.into())
    }
}
