use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{n}-particle space has dimension {dim}, above the budget of {budget} rows")]
    DimensionBudget { n: usize, dim: usize, budget: usize },
    #[error("label {label} is out of range for {n} particles")]
    LabelOutOfRange { label: usize, n: usize },
    #[error("label {0} appears more than once")]
    DuplicateLabel(usize),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vacuum component must be {expected}, got {found}")]
    InvalidVacuum { expected: f64, found: String },
    #[error("requested {requested} particles but the cutoff is {cutoff}")]
    CutoffExceeded { requested: usize, cutoff: usize },
    #[error("inverse temperature must be positive, got {0}")]
    NonPositiveBeta(f64),
    #[error("integer overflow: {0}")]
    Overflow(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
