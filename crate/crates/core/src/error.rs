use thiserror::Error;

/// Errors raised by the evaluators, simulators and the experiment runner.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Photon counting cannot separate two objects that differ only in phase.
    #[error("counting fails: |alpha1| = |alpha2|, transmitted counts carry no information")]
    CountingFails,
    /// The task is outside the operation's regime (e.g. interferometry on unequal moduli).
    #[error("regime error: {0}")]
    Regime(String),
    /// A matrix or state failed validation.
    #[error("validation error: {0}")]
    Validation(String),
    /// The requested computation exceeds a configured size limit.
    #[error("resource error: {0}")]
    Resource(String),
    /// Malformed input text (protocol scripts, configs).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Invalid experiment configuration, naming the offending field.
    #[error("invalid config field `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
