use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),

    #[error("invalid degree {degree} for this operation (ambient dimension {ambient})")]
    InvalidDegree { degree: usize, ambient: usize },

    #[error("rows are linearly dependent")]
    DependentRows,

    #[error("enumeration budget exceeded after {0} nodes")]
    BudgetExceeded(u64),

    #[error("time budget exhausted")]
    TimeBudgetExhausted,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("value out of domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("not decomposable: {0}")]
    NotDecomposable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
