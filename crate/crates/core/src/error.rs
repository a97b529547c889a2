use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("facet count must be at least 3, got {0}")]
    InvalidFacetCount(usize),

    #[error("unbounded: {0}")]
    Unbounded(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("numerical breakdown: {0}")]
    Numerical(String),

    #[error("resource limit exceeded: {0}")]
    ResourceExhausted(String),

    #[error("target set is empty")]
    EmptyTarget,

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
