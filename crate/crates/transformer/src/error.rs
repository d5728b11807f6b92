use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransformerError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("training diverged at step {step}: loss {loss}")]
    Divergence { step: usize, loss: f64 },
    #[error("non-finite activations")]
    NonFinite,
    #[error("degenerate attention distribution")]
    DegenerateAttention,
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Num(#[from] joma_num::NumError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
