use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid S-path at index {index}: {reason}")]
    InvalidPath { index: usize, reason: &'static str },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("n = {n} exceeds the enumeration cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid prior: {0}")]
    Prior(String),

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("quadrature failed to converge after {evaluations} evaluations")]
    Quadrature { evaluations: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("csv error at row {row}: {reason}")]
    Csv { row: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
