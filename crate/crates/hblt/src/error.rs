use thiserror::Error;

#[derive(Debug, Error)]
pub enum HbltError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("rho must lie in [-1, 1], got {0}")]
    Domain(f64),
    #[error("co-occurrence formula is singular: rho^(L-1) * rho0 = 1")]
    Singular,
    #[error("{0} latents exceed the enumeration limit of {1}")]
    TooLarge(usize, usize),
    #[error("no active leaf after {0} resamples")]
    EmptyActiveSet(usize),
    #[error("token {0} was never active")]
    ZeroMarginal(usize),
    #[error("token index {0} out of range")]
    Token(usize),
    #[error("corpus parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
