use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("q must be prime, got {0}")]
    CompositeModulus(u64),

    #[error("modulus {0} out of supported range (2..=2^31)")]
    ModulusOutOfRange(u64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sample is not realizable over the requested class")]
    UnrealizableSample,

    #[error("consistent set is empty")]
    EmptyConsistentSet,

    #[error("enumeration guard exceeded: set of size {size} > guard {guard}; use the counting or sampling path")]
    GuardExceeded { size: String, guard: u64 },

    #[error("contradictory sample: point {point} carries both labels")]
    ContradictorySample { point: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
