use alloc::string::String;

use crate::data::Variable;

/// Every failure the core can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset contains no rows")]
    EmptyDataset,
    #[error("row {row}: cannot parse timestamp {value:?}")]
    MalformedTimestamp { row: usize, value: String },
    #[error("row {row}: cannot parse {column} value {value:?}")]
    MalformedNumber { row: usize, column: &'static str, value: String },
    #[error("variable {0} has no observed value")]
    AllMissingColumn(Variable),
    #[error("variable {variable} is missing at index {index}")]
    MissingValue { variable: Variable, index: usize },
    #[error("timestamps must be strictly increasing (index {0})")]
    NotChronological(usize),
    #[error("invalid bounds for {0}: lower must be below upper")]
    InvalidBounds(Variable),
    #[error("split ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),
    #[error("too few samples: {0}")]
    TooFewSamples(String),

    #[error("lag must be at least 1")]
    NonPositiveLag,
    #[error("lag {lag} is not shorter than the series ({len} rows)")]
    LagOutOfRange { lag: usize, len: usize },
    #[error("rolling window {0} is below 2")]
    WindowTooSmall(usize),
    #[error("invalid feature spec: {0}")]
    InvalidFeatureSpec(String),
    #[error("not enough history: {0}")]
    InsufficientHistory(String),
    #[error("matrix has no rows")]
    EmptyMatrix,
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("input is empty")]
    EmptyInput,
    #[error("bin count must be at least 1")]
    InvalidBinCount,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown model family {0:?}; valid names: svr, mlp, rf, dt, lstm, cnn_lstm, xgb")]
    UnknownFamily(String),
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("invalid hyperparameter {name}: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("fold count {0} must be at least 2")]
    InvalidFoldCount(usize),
    #[error("every grid cell failed; first failure: {0}")]
    AllConfigsFailed(String),
    #[error("expected {expected} target columns, got {got}")]
    TargetCountMismatch { expected: usize, got: usize },
    #[error("model expects {expected} features, got {got}")]
    FeatureCountMismatch { expected: usize, got: usize },
    #[error("input kind does not match the model ({0})")]
    InputKindMismatch(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training data is empty or too small")]
    EmptyData,
    #[error("training loss became non-finite at epoch {0}")]
    DivergedLoss(usize),
    #[error("window of {window} rows needs a longer series ({len} rows)")]
    SeriesTooShort { window: usize, len: usize },
    #[error("kernel size {kernel} exceeds window {window}")]
    KernelTooLarge { kernel: usize, window: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
