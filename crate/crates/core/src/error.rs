use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimapError>;

#[derive(Debug, Error)]
pub enum SimapError {
    #[error("simplex dimension must be at least 1")]
    ZeroDimension,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("barycentric coordinates sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("point lies outside the enclosing simplex: coordinate {index} is {value}")]
    OutsideSimplex { index: usize, value: f64 },

    #[error("ordering does not contain the point: subdivided coordinate {index} is {value}")]
    WrongOrdering { index: usize, value: f64 },

    #[error("not a permutation of 0..={max}: {perm:?}")]
    InvalidOrdering { perm: Vec<usize>, max: usize },

    #[error("{what} is not representable in 128 bits")]
    Overflow { what: String },

    #[error("vertex {key} is not materialized and the model has no parent level")]
    MissingParent { key: String },

    #[error("level mismatch: expected {expected}, found {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("cannot parse vertex key `{0}`")]
    ParseKey(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
