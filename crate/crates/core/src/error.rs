use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,

    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("invalid degeneracy pattern: {0}")]
    InvalidPattern(String),

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("wrong parameter count: expected {expected}, found {found}")]
    ParameterCount { expected: usize, found: usize },

    #[error("rewrite not applicable at position {position}: {reason}")]
    NotApplicable { position: usize, reason: String },

    #[error("target form unreachable: {0}")]
    Unreachable(String),

    #[error("word is not in a recognized form")]
    UnrecognizedForm,

    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("block ({0}, {1}) crosses a degeneracy class boundary")]
    CrossesClassBoundary(usize, usize),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("chart is not at an interior point: {0}")]
    NotInterior(String),

    #[error("matrix is not unitary (deviation {deviation:.3e} exceeds {tolerance:.3e})")]
    NotUnitary { deviation: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
