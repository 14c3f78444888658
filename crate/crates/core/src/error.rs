use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("enumeration infeasible: more than {cap} reachable states")]
    EnumerationInfeasible { cap: usize },

    #[error("{what} too large: {size} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("distribution not normalized: {0}")]
    NotNormalized(String),

    #[error("channel is not deterministic")]
    NonDeterministic,

    #[error("empty batch")]
    EmptyBatch,

    #[error("sequence length {got} does not match horizon {expected}")]
    SequenceLength { expected: usize, got: usize },

    #[error("grid {width}x{height} does not fit a {size}x{size} observation")]
    RenderTooSmall {
        width: usize,
        height: usize,
        size: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
