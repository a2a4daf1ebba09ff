use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by every module of the crate.
///
/// Each variant maps to a stable machine-readable code (see [`Error::code`]).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input violates an operation's precondition.
    #[error("domain error: {0}")]
    Domain(String),
    /// A compressor backend failed to produce a length.
    #[error("backend error: {message}")]
    Backend {
        message: String,
        diagnostics: String,
    },
    /// An enumeration or allocation guard was exceeded.
    #[error("resource limit: {0}")]
    Resource(String),
    /// A statistic is mathematically undefined for the given input.
    #[error("undefined result: {0}")]
    Undefined(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::Backend { .. } => "E_BACKEND",
            Error::Resource(_) => "E_RESOURCE",
            Error::Undefined(_) => "E_UNDEFINED",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
