use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum SqaError {
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
    #[error("degenerate signal: population std below threshold")]
    DegenerateSignal,
    #[error("record too short: {got} samples, need at least {need}")]
    RecordTooShort { got: usize, need: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("stale cache: {0}")]
    StaleCache(String),
    #[error("invalid dropout probability {0}, need p in [0, 1)")]
    InvalidP(f64),
    #[error("too few subjects: {subjects} subjects for {folds} folds")]
    TooFewSubjects { subjects: usize, folds: usize },
    #[error("empty fold: no training segments")]
    EmptyFold,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("single class present; need at least one good and one bad sample")]
    SingleClass,
    #[error("empty input")]
    EmptyInput,
    #[error("malformed file {path} at line {line}: {msg}")]
    MalformedFile {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("label coverage error in {path}: {msg}")]
    CoverageGap { path: String, msg: String },
    #[error("weight file version mismatch: {0}")]
    VersionMismatch(String),
    #[error("weight file body truncated: expected {expected} bytes, got {got}")]
    TruncatedBody { expected: usize, got: usize },
    #[error("value out of range: {0}")]
    RangeError(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SqaError>;
