use joma_num::NumError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("softmax normaliser is zero")]
    DegenerateSoftmax,
    #[error("delta component {0} is zero")]
    ZeroDelta(usize),
    #[error("weight vector has zero norm")]
    ZeroV,
    #[error("overflow cap reached at t = {t}")]
    Overflow { t: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}
