use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("column {0} has zero variance")]
    ConstantColumn(usize),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("linear predictor exceeds the exponent guard (|x'b| = {0:.3e} > 500)")]
    Overflow(f64),
    #[error("residual vector is zero; square-root lasso gradient is undefined")]
    ZeroResidual,
    #[error("argument outside its domain: {0}")]
    Domain(String),
    #[error("dataset must be standardized")]
    NotStandardized,
    #[error("at least 100 Monte Carlo draws are required, got {0}")]
    InsufficientDraws(usize),
    #[error("fold {fold} has only {size} observations")]
    FoldTooSmall { fold: usize, size: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("csv parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
    #[error("all {0} replications failed")]
    AllReplicationsFailed(usize),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
