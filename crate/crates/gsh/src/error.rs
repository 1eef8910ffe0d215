use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GshError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid index: {0}")]
    InvalidIndex(String),
    #[error("empty input")]
    EmptyInput,
    #[error("grid under-resolves the requested bound: {0}")]
    UnderResolved(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("insufficient dyadic shells: found {found}, need {need}")]
    InsufficientShells { found: usize, need: usize },
    #[error("homogeneous solution is not periodic (non-resonant mode)")]
    NotPeriodic,
    #[error("mode is resonant; use the resonant solution formula")]
    Resonant,
    #[error("no solution: compatibility integral {re:e}{im:+e}i exceeds tolerance")]
    NoSolution { re: f64, im: f64 },
    #[error("primitive has nonzero slope {0}; sublevel sets are not periodic")]
    NonzeroSlope(String),
    #[error("function has connected sublevel sets; no disjoint pair exists")]
    Connected,
    #[error("pattern not recognized: {0}")]
    PatternNotRecognized(String),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("right-hand side is outside the annihilator at mode {0}")]
    Annihilator(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GshError {
    fn from(e: std::io::Error) -> Self {
        GshError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for GshError {
    fn from(e: serde_json::Error) -> Self {
        GshError::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GshError>;
