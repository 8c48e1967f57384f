use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    Potential(String),
    #[error("precision_bits must be at least 64, got {0}")]
    Precision(u32),
    #[error("moment x^{moment} not resolved within a budget of {panels} panels")]
    UnresolvedMoment { moment: usize, panels: usize },
    #[error("recurrence lost positivity at j = {0}; increase precision_bits")]
    Positivity(usize),
    #[error("index {index} exceeds Jmax = {jmax}")]
    Index { index: usize, jmax: usize },
    #[error("N must be even, got {0}")]
    OddN(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("{what} is numerically singular (condition estimate {cond:e})")]
    Singular { what: String, cond: f64 },
    #[error("missing I(q) for q = {0}")]
    MissingQ(i64),
    #[error("determinant {0:e} is negative beyond round-off")]
    NegativeDeterminant(f64),
    #[error("cache: {0}")]
    Cache(String),
}
