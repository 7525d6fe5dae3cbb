use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("value exceeds supported capacity: {0}")]
    Capacity(String),

    /// Job results that do not describe the same computation.
    #[error("configuration mismatch: {0}")]
    Config(String),

    /// A job result that fails its checksum or cannot be parsed.
    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("incomplete job set, missing job indices: {missing:?}")]
    Incomplete { missing: Vec<u32> },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
