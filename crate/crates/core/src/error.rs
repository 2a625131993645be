use thiserror::Error;

/// Errors raised by model construction, problem assembly and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("third-derivative tensor is not symmetric: slice {slice} entry ({row}, {col}) deviates by {deviation:e}")]
    AsymmetricTensor {
        slice: usize,
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("quadratic coefficient matrix is not symmetric: entry ({row}, {col}) deviates by {deviation:e}")]
    AsymmetricMatrix {
        row: usize,
        col: usize,
        deviation: f64,
    },

    #[error("non-finite {what} encountered")]
    NonFinite { what: &'static str },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
