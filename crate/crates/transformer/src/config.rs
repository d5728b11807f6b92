use crate::{Result, TransformerError};
use joma_dynamics::AttentionKind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    CrossEntropy,
    /// Maximize `Σ_k g_k h_k` on the top layer's hidden nodes, with
    /// `g_k = 1[y₀ = k mod D] − 1/D`.
    NodePayoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Positions a query at `t` attends over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    /// The inclusive prefix `0..=t`.
    #[default]
    Causal,
    /// The whole sequence.
    Full,
}

impl Window {
    /// End of the attended range for position `t` of a length-`len` sequence.
    pub fn end(self, t: usize, len: usize) -> usize {
        match self {
            Window::Causal => t + 1,
            Window::Full => len,
        }
    }
}

/// The choices that shape a forward pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arch {
    pub activation: Activation,
    pub attention: AttentionKind,
    pub window: Window,
}

/// Which positions of a sequence contribute to the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossPositions {
    All,
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub vocab: usize,
    pub d: usize,
    pub hidden: usize,
    pub classes: usize,
    pub layers: usize,
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        if self.vocab == 0 || self.hidden == 0 || self.classes == 0 || self.layers == 0 {
            return Err(TransformerError::Config("all dimensions must be positive".into()));
        }
        if self.d < 2 * self.vocab {
            return Err(TransformerError::Config(format!(
                "d = {} cannot hold {} orthonormal context and query embeddings",
                self.d,
                2 * self.vocab
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dims: ModelDims,
    pub objective: Objective,
    pub optimizer: Optimizer,
    pub lr: f64,
    pub steps: usize,
    pub batch: usize,
    pub seed: u64,
    pub activation: Activation,
    pub attention: AttentionKind,
    #[serde(default)]
    pub window: Window,
    pub loss_at: LossPositions,
    /// Metrics are recorded every `stride` steps, and at the end.
    pub stride: usize,
    /// Standard deviation of the lower-layer weights, in units of `1/√d`.
    pub init_scale: f64,
}

impl TrainConfig {
    pub fn arch(&self) -> Arch {
        Arch {
            activation: self.activation,
            attention: self.attention,
            window: self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.attention.validate().map_err(|e| TransformerError::Config(e.to_string()))?;
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(TransformerError::Config(format!("learning rate must be nonnegative, got {}", self.lr)));
        }
        if self.steps == 0 || self.batch == 0 || self.stride == 0 {
            return Err(TransformerError::Config("steps, batch and stride must be positive".into()));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(TransformerError::Config("init scale must be nonnegative".into()));
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
                return Err(TransformerError::Config("adam needs betas in [0, 1) and eps > 0".into()));
            }
        }
        Ok(())
    }
}
