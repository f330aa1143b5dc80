use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("value out of domain: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid Gram matrix: {0}")]
    InvalidGram(String),
    #[error("invalid unitary: {0}")]
    InvalidUnitary(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("problem too large for this routine: {0}")]
    TooLarge(String),
    #[error("ingestion error at line {line}: {message}")]
    Ingestion { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDimension(_) => "invalid_dimension",
            Error::Domain(_) => "domain",
            Error::Shape(_) => "shape",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::InvalidGram(_) => "invalid_gram",
            Error::InvalidUnitary(_) => "invalid_unitary",
            Error::Numerical(_) => "numerical_failure",
            Error::TooLarge(_) => "too_large",
            Error::Ingestion { .. } => "ingestion",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
