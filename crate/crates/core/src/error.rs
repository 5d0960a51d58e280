use thiserror::Error;

/// Errors produced by the classifiers, the benchmark harness and dataset I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An input contains NaN or infinite entries.
    #[error("non-finite input: {0}")]
    NonFinite(String),

    /// An argument is outside the operation's domain (empty data, bad sizes, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Dataset ingestion failure with file/row context.
    #[error("dataset error in {path}{}: {message}", row.map(|r| format!(", row {r}")).unwrap_or_default())]
    Dataset {
        path: String,
        row: Option<usize>,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
