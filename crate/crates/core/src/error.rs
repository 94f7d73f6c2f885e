//! Error types shared across the crate.

/// Crate-wide error type.
///
/// The variants map onto the CLI exit codes: `Usage` → 2, `Config` → 3,
/// `Data` → 4. Everything else exits with 1.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid configuration (bad regex, missing column, nonpositive parameter).
    #[error("configuration error: {0}")]
    Config(String),
    /// Inconsistent or malformed input data (unsorted stream, impossible counts).
    #[error("data error: {0}")]
    Data(String),
    /// Misuse of an API or unknown output format.
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Config(_) => 3,
            Error::Data(_) => 4,
            _ => 1,
        }
    }
}
