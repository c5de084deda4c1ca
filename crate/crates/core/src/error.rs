use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("index sets of terms {first} and {second} overlap at y-index {index}")]
    OverlappingIndexSets {
        first: usize,
        second: usize,
        index: usize,
    },

    #[error("index {index} out of range for grid of {count} samples")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("atomic interval: generation {generation} is already a single sample")]
    AtomicInterval { generation: u32 },

    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("kernel step {kernel} does not match operand step {operand}")]
    StepMismatch { kernel: f64, operand: f64 },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("support radius {radius} is smaller than 4 grid steps ({step} each)")]
    RadiusTooSmall { radius: f64, step: f64 },

    #[error("level grid is empty or not strictly increasing")]
    InvalidLevels,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
