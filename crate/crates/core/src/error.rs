use thiserror::Error;

pub type Result<T> = std::result::Result<T, SdError>;

#[derive(Debug, Error)]
pub enum SdError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("point has no id; explicit-subset models need point ids")]
    MissingPointId,

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("enumeration of C({n}, {k}) refused: n must be at most {max}")]
    EnumerationTooLarge { n: usize, k: usize, max: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("class {class} has no training points")]
    EmptyClass { class: usize },

    #[error("class {class} out of range 1..={n_classes}")]
    ClassOutOfRange { class: usize, n_classes: usize },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("point {0} is not covered by any model")]
    UncoveredPoint(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("fixture integrity: {0}")]
    Integrity(String),

    #[error("{path}, line {line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("ensemble file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
