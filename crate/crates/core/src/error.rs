use thiserror::Error;

/// Errors raised by the library. `exit_code` maps them onto the CLI contract.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("index out of range: {0}")]
    Bounds(String),

    #[error("resource limit exceeded: {what} (limit {limit})")]
    Resource { what: String, limit: u128 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("sequence is not finite-valued: {0}")]
    NotFiniteAlphabet(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn bounds(msg: impl Into<String>) -> Self {
        Error::Bounds(msg.into())
    }

    /// Short machine-readable kind, used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::Bounds(_) => "bounds",
            Error::Resource { .. } => "resource",
            Error::Parse { .. } => "parse",
            Error::Unsupported(_) => "unsupported",
            Error::NotFiniteAlphabet(_) => "not_finite_alphabet",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    /// 3 for resource caps, 2 for everything the caller could fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource { .. } => 3,
            _ => 2,
        }
    }
}
