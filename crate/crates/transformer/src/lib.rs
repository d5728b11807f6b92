//! A small transformer in the JoMA setting: fixed orthonormal token
//! embeddings, a free attention-logit table `Z` per layer, and a one-hidden
//! layer MLP with identity residual. Gradients are written out by hand.

pub mod checkpoint;
pub mod config;
pub mod error;
pub mod forward;
pub mod grad;
pub mod metrics;
pub mod model;
pub mod optim;
pub mod train;

pub use config::{Activation, Arch, Window, LossPositions, ModelDims, Objective, Optimizer, TrainConfig};
pub use error::TransformerError;
pub use forward::{forward, Example, Trace};
pub use grad::loss_and_grads;
pub use metrics::{attention_entropy, attention_entropy_at, ncorr, neuron_max_activations, permutation_null, stable_rank_series, MetricsRow, MetricsSeries, NcorrLayer};
pub use model::{ModelParams, Trainable};
pub use train::{train, train_observed, TrainOutput};

pub type Result<T> = std::result::Result<T, TransformerError>;
