use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid privacy budget: {0}")]
    InvalidBudget(String),

    #[error("rank {rank} out of range [1, {max}]")]
    RankOutOfRange { rank: u64, max: u64 },

    #[error("invalid quality universe: {0}")]
    InvalidUniverse(String),

    #[error("margin search exhausted its cap of {cap} ranks without certifying a margin")]
    CapExhausted { cap: u64 },

    #[error("expected {expected} thresholds, got {got}")]
    ThresholdCount { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid neighbor pair: {0}")]
    InvalidNeighborPair(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
