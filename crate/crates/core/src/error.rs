use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("function `{0}` is improper (no finite value)")]
    Improper(String),

    #[error("unknown descriptor `{0}`")]
    UnknownDescriptor(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lower bound Σf_i(x_i) ≥ c(x) violated by {slack:.3e} at {witness}")]
    LowerBoundViolated { slack: f64, witness: String },

    #[error("combinatorial budget exceeded: {required} evaluations needed, cap is {cap}")]
    BudgetExceeded { required: u128, cap: u128 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
