use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} is not on the grid of dimension `{dimension}`")]
    UnknownValue { dimension: String, value: String },

    #[error("gene {index} = {gene} is out of range for cardinality {cardinality}")]
    GeneOutOfRange {
        index: usize,
        gene: usize,
        cardinality: usize,
    },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("need at least 2 scores to fit a slope, got {0}")]
    InsufficientHistory(usize),

    #[error("population of {size} is too small to draw 2 parents")]
    PopulationTooSmall { size: usize },

    #[error("experience memory is empty")]
    EmptyMemory,

    #[error("evaluation budget of {budget} exhausted")]
    BudgetExhausted { budget: usize },

    #[error("objective returned non-finite value {value} at evaluation {eval_index}")]
    NonFiniteFitness { value: f64, eval_index: usize },

    #[error("unsupported objective kind `{0}`")]
    UnsupportedKind(String),

    #[error("need at least 2 samples for a confidence interval, got {0}")]
    InsufficientSamples(usize),

    #[error("run {repeat} of strategy `{strategy}` failed: {message}")]
    RunFailed {
        strategy: String,
        repeat: usize,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
