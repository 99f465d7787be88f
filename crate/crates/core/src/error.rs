use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid carrier placement: {0}")]
    InvalidPlacement(String),

    #[error(
        "degenerate nullspace: need {needed} singular values below floor {floor:e}, found {found} \
         (smallest retained {smallest_kept:e}, largest discarded {largest_discarded:e})"
    )]
    DegenerateNullspace {
        needed: usize,
        found: usize,
        floor: f64,
        smallest_kept: f64,
        largest_discarded: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lag {lag} lies outside the suppression window")]
    LagOutsideWindow { lag: i64 },

    #[error("invalid lag window: {0}")]
    InvalidWindow(String),

    #[error("input vector is zero")]
    ZeroInput,

    #[error("no side peaks: suppression set is empty")]
    NoSidePeaks,

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
