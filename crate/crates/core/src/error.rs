use thiserror::Error;

/// Errors surfaced by the public library operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// A value is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A configuration field is missing, unparseable, or out of range.
    #[error("config error: field `{field}`: {message}")]
    Config { field: String, message: String },
    /// A checkpoint could not be read, written, or matched to a scenario.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    /// Numeric failure mid-run (NaN/Inf in loss or parameters).
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
