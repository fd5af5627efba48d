use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed pattern file or CLI specification.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Configuration where the statistic or bound degenerates (zero variance, vacuous bound).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// Desk-scale resource cap exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Pattern not covered by the requested bound.
    #[error("unsupported pattern: {0}")]
    Unsupported(String),

    /// Grid not aligned with the indicator or atoms of the weight law.
    #[error("grid alignment error: {0}")]
    Alignment(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
