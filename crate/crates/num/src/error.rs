use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumError {
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("column {0} has zero norm")]
    ZeroColumn(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("quadrature did not converge after {intervals} intervals (estimate {estimate}, error {error})")]
    NonConvergence {
        intervals: usize,
        estimate: f64,
        error: f64,
    },
}
