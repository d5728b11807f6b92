//! Experiment configs. Each is a JSON object with every field present
//! after resolution, so a manifest's config reproduces the run.

use crate::error::CliError;
use crate::experiments::ExperimentId;
use joma_dynamics::AttentionKind;
use joma_hblt::HbltSpec;
use joma_transformer::{Activation, LossPositions, ModelDims, Objective, Optimizer, TrainConfig, Window};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionName {
    Linear,
    Exp,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thm1Config {
    pub attention: AttentionName,
    /// Normalizer `A` of exp attention.
    pub normalizer: f64,
    pub tokens: usize,
    pub nodes: usize,
    pub classes: usize,
    pub eta: f64,
    /// Horizon of the run at `eta`; the step count is `t_end / eta`.
    pub t_end: f64,
    pub stride: u64,
    /// Initial logits; `None` picks 1 for linear attention (0 is a fixed
    /// point there) and 0 otherwise.
    pub init_logit: Option<f64>,
    pub seed: u64,
}

impl Default for Thm1Config {
    fn default() -> Self {
        Self {
            attention: AttentionName::Exp,
            normalizer: 1.0,
            tokens: 6,
            nodes: 3,
            classes: 3,
            eta: 1e-4,
            t_end: 5.0,
            stride: 500,
            init_logit: None,
            // Several draws reach a finite-time blow-up of the exp flow
            // before t = 5; this one stays bounded.
            seed: 4,
        }
    }
}

impl Thm1Config {
    pub fn kind(&self) -> AttentionKind {
        match self.attention {
            AttentionName::Linear => AttentionKind::Linear,
            AttentionName::Exp => AttentionKind::Exp {
                normalizer: self.normalizer,
            },
            AttentionName::Softmax => AttentionKind::Softmax,
        }
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.eta).round() as u64
    }

    pub fn logit0(&self) -> f64 {
        self.init_logit
            .unwrap_or(if self.attention == AttentionName::Linear { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputShape {
    /// Gaussian bumps over token positions, one per class.
    Smooth,
    /// Dirichlet(1) draws, one per class.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig2Config {
    pub tokens: usize,
    /// Classes, and hidden nodes (one per class).
    pub classes: usize,
    pub shape: InputShape,
    /// Bump width in token positions, for smooth inputs.
    pub width: f64,
    pub eta: f64,
    pub steps: u64,
    pub stride: u64,
    pub seed: u64,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            tokens: 30,
            classes: 5,
            shape: InputShape::Smooth,
            width: 5.0,
            eta: 2e-2,
            steps: 2500,
            stride: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig3Config {
    pub delta: Vec<f64>,
    pub eta: f64,
    pub t_end: f64,
    pub snapshot_dt: f64,
    /// Overflow cap on `|v|`.
    pub cap: f64,
    /// Largest change of any component in one accepted step.
    pub max_increment: f64,
    pub seed: u64,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            delta: vec![2.0, 1.0, 0.5],
            eta: 1e-3,
            t_end: 2.0,
            snapshot_dt: 1e-2,
            cap: 30.0,
            max_increment: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig4Config {
    pub trials: usize,
    pub dim: usize,
    /// Components of `μ` are uniform on `[mu_low, mu_high]`, redrawn until
    /// all pairwise gaps exceed `min_gap`.
    pub mu_low: f64,
    pub mu_high: f64,
    pub min_gap: f64,
    /// `v(0) = init_frac · μ`
    pub init_frac: f64,
    pub eta: f64,
    pub t_end: f64,
    pub snapshot_dt: f64,
    pub seed: u64,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Self {
            trials: 10,
            dim: 5,
            mu_low: 0.5,
            mu_high: 2.5,
            min_gap: 0.25,
            init_frac: 0.01,
            eta: 2e-3,
            t_end: 30.0,
            snapshot_dt: 0.02,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thm4Config {
    /// Targets `μ`, each with two components; the ratio compares
    /// component 0 against component 1.
    pub targets: Vec<Vec<f64>>,
    pub init_frac: f64,
    pub eta: f64,
    pub t_end: f64,
    pub snapshot_dt: f64,
    /// The ratio is read at the first snapshot with `δ₁(t) ≤ progress · δ₁(0)`.
    pub progress: f64,
    pub seed: u64,
}

impl Default for Thm4Config {
    fn default() -> Self {
        Self {
            targets: vec![vec![2.0, 1.0], vec![1.0, 1.0]],
            init_frac: 0.01,
            eta: 1e-3,
            t_end: 20.0,
            snapshot_dt: 1e-3,
            progress: 1e-3,
            seed: 0,
        }
    }
}

/// A radial input density, by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DensityConfig {
    Gaussian { dim: usize },
    Ball { dim: usize, radius: f64 },
    /// Isotropic mixture of zero-mean Gaussians with the given weights and
    /// scales, tabulated on `[0, extent]`.
    ScaleMixture {
        dim: usize,
        weights: Vec<f64>,
        scales: Vec<f64>,
        extent: f64,
        knots: usize,
    },
}

impl DensityConfig {
    pub fn heavy_tailed(dim: usize) -> Self {
        DensityConfig::ScaleMixture {
            dim,
            weights: vec![0.9, 0.1],
            scales: vec![0.1, 3.0],
            extent: 15.0,
            knots: 1200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThetaConfig {
    pub density: DensityConfig,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    pub seed: u64,
}

impl Default for ThetaConfig {
    fn default() -> Self {
        Self {
            density: DensityConfig::Gaussian { dim: 1 },
            r_min: -10.0,
            r_max: 10.0,
            points: 201,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticalConfig {
    /// Two class centers.
    pub centers: Vec<Vec<f64>>,
    /// `a₁`; `a₂` is solved for.
    pub a1: f64,
    pub density: DensityConfig,
    pub span: f64,
    pub grid: f64,
    pub seed: u64,
}

impl Default for CriticalConfig {
    fn default() -> Self {
        Self {
            centers: vec![vec![0.6, 0.4], vec![0.4, 0.6]],
            a1: 1.0,
            density: DensityConfig::heavy_tailed(2),
            span: 3.0,
            grid: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CooccurConfig {
    pub spec: HbltSpec,
    pub samples: usize,
    pub seed: u64,
}

impl Default for CooccurConfig {
    fn default() -> Self {
        Self {
            spec: HbltSpec::uniform(2, 0.9, vec![2, 4, 8], 2, 16, 8),
            samples: 100_000,
            seed: 0,
        }
    }
}

/// Corpus and transformer settings shared by the training experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSetup {
    pub corpus: HbltSpec,
    pub train_samples: usize,
    /// Held-out samples for the validation loss and entropy series.
    pub val_samples: usize,
    pub d: usize,
    pub hidden: usize,
    pub layers: usize,
    pub objective: Objective,
    pub optimizer: Optimizer,
    pub lr: f64,
    pub steps: usize,
    pub batch: usize,
    pub activation: Activation,
    pub attention: AttentionKind,
    pub window: Window,
    pub loss_at: LossPositions,
    pub stride: usize,
    pub init_scale: f64,
}

impl TrainSetup {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            dims: ModelDims {
                vocab: self.corpus.vocab,
                d: self.d,
                hidden: self.hidden,
                classes: self.corpus.classes,
                layers: self.layers,
            },
            objective: self.objective,
            optimizer: self.optimizer,
            lr: self.lr,
            steps: self.steps,
            batch: self.batch,
            seed,
            activation: self.activation,
            attention: self.attention,
            window: self.window,
            loss_at: self.loss_at,
            stride: self.stride,
            init_scale: self.init_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table1Config {
    pub setup: TrainSetup,
    /// Samples the NCorr table is computed on.
    pub eval_samples: usize,
    pub seeds: usize,
    pub seed: u64,
}

impl Default for Table1Config {
    fn default() -> Self {
        crate::presets::table1("c20-nch2-n10-20").expect("default preset exists")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrSweepConfig {
    pub setup: TrainSetup,
    pub lrs: Vec<f64>,
    pub seed: u64,
}

impl Default for LrSweepConfig {
    fn default() -> Self {
        crate::presets::lr_sweep()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankConfig {
    pub setup: TrainSetup,
    pub seed: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        crate::presets::rank_series()
    }
}

/// A fully resolved experiment config, tagged by experiment id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Config {
    Thm1Invariants(Thm1Config),
    Fig2SoftmaxEstimate(Fig2Config),
    Fig3LinearGrowth(Fig3Config),
    Fig4NonlinearEntropy(Fig4Config),
    Thm4Ratio(Thm4Config),
    ThetaTables(ThetaConfig),
    CriticalPoints(CriticalConfig),
    HbltCooccur(CooccurConfig),
    Table1Ncorr(Table1Config),
    EntropyLrSweep(LrSweepConfig),
    RankSeries(RankConfig),
}

impl Config {
    pub fn default_for(id: ExperimentId) -> Config {
        match id {
            ExperimentId::Thm1Invariants => Config::Thm1Invariants(Default::default()),
            ExperimentId::Fig2SoftmaxEstimate => Config::Fig2SoftmaxEstimate(Default::default()),
            ExperimentId::Fig3LinearGrowth => Config::Fig3LinearGrowth(Default::default()),
            ExperimentId::Fig4NonlinearEntropy => Config::Fig4NonlinearEntropy(Default::default()),
            ExperimentId::Thm4Ratio => Config::Thm4Ratio(Default::default()),
            ExperimentId::ThetaTables => Config::ThetaTables(Default::default()),
            ExperimentId::CriticalPoints => Config::CriticalPoints(Default::default()),
            ExperimentId::HbltCooccur => Config::HbltCooccur(Default::default()),
            ExperimentId::Table1Ncorr => Config::Table1Ncorr(Default::default()),
            ExperimentId::EntropyLrSweep => Config::EntropyLrSweep(Default::default()),
            ExperimentId::RankSeries => Config::RankSeries(Default::default()),
        }
    }

    pub fn id(&self) -> ExperimentId {
        match self {
            Config::Thm1Invariants(_) => ExperimentId::Thm1Invariants,
            Config::Fig2SoftmaxEstimate(_) => ExperimentId::Fig2SoftmaxEstimate,
            Config::Fig3LinearGrowth(_) => ExperimentId::Fig3LinearGrowth,
            Config::Fig4NonlinearEntropy(_) => ExperimentId::Fig4NonlinearEntropy,
            Config::Thm4Ratio(_) => ExperimentId::Thm4Ratio,
            Config::ThetaTables(_) => ExperimentId::ThetaTables,
            Config::CriticalPoints(_) => ExperimentId::CriticalPoints,
            Config::HbltCooccur(_) => ExperimentId::HbltCooccur,
            Config::Table1Ncorr(_) => ExperimentId::Table1Ncorr,
            Config::EntropyLrSweep(_) => ExperimentId::EntropyLrSweep,
            Config::RankSeries(_) => ExperimentId::RankSeries,
        }
    }

    pub fn seed(&self) -> u64 {
        self.to_value()["seed"].as_u64().expect("every config has a seed")
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("configs serialize")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs serialize")
    }

    /// Parses a config for `id`. Missing fields take their defaults; the
    /// `experiment` tag may be omitted but must match when present.
    pub fn parse(id: ExperimentId, text: &str) -> Result<Config, CliError> {
        Config::parse_onto(&Config::default_for(id), text)
    }

    /// [`Config::parse`] with missing fields taken from `base`.
    pub fn parse_onto(base: &Config, text: &str) -> Result<Config, CliError> {
        let id = base.id();
        let given: Value = serde_json::from_str(text)?;
        let Value::Object(given) = given else {
            return Err(CliError::Config("config must be a JSON object".into()));
        };
        if let Some(tag) = given.get("experiment") {
            if tag.as_str() != Some(id.name()) {
                return Err(CliError::Config(format!("config is for {tag}, not {}", id.name())));
            }
        }
        let mut merged = base.to_value();
        merge(&mut merged, Value::Object(given));
        Config::from_value(merged)
    }

    pub fn from_value(v: Value) -> Result<Config, CliError> {
        let c: Config = serde_json::from_value(v)?;
        c.validate()?;
        Ok(c)
    }

    /// Sets `key` (a dotted path, or a field name found exactly once
    /// anywhere in the config) to `raw`, parsed as JSON when it parses
    /// and as a string otherwise.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), CliError> {
        let key = key.replace('-', "_");
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut root = self.to_value();
        let path = resolve_path(&root, &key)?;
        let mut slot = &mut root;
        for p in &path {
            slot = slot.get_mut(p.as_str()).expect("path was just resolved");
        }
        *slot = value;
        *self = Config::from_value(root)?;
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        match self {
            Config::Thm1Invariants(c) => {
                if c.tokens == 0 || c.nodes == 0 || c.classes == 0 || c.stride == 0 {
                    return bad("tokens, nodes, classes and stride must be positive");
                }
                if !(c.eta > 0.0 && c.t_end > 0.0) || c.steps() == 0 {
                    return bad("eta and t_end must be positive, with at least one step");
                }
            }
            Config::Fig2SoftmaxEstimate(c) => {
                if c.tokens == 0 || c.classes == 0 || c.stride == 0 || !(c.eta > 0.0) || !(c.width > 0.0) {
                    return bad("tokens, classes, stride, eta and width must be positive");
                }
            }
            Config::Fig3LinearGrowth(c) => {
                if c.delta.is_empty() || !(c.eta > 0.0 && c.snapshot_dt > 0.0 && c.cap > 0.0 && c.max_increment > 0.0) {
                    return bad("delta must be nonempty; eta, snapshot_dt, cap, max_increment positive");
                }
            }
            Config::Fig4NonlinearEntropy(c) => {
                if c.trials == 0 || c.dim < 2 {
                    return bad("need at least one trial and dim >= 2");
                }
                if !(c.mu_low < c.mu_high) || (c.dim - 1) as f64 * c.min_gap >= c.mu_high - c.mu_low {
                    return bad("mu range cannot hold dim components at the requested gap");
                }
                if !(c.eta > 0.0 && c.snapshot_dt > 0.0 && c.t_end > 0.0) {
                    return bad("eta, snapshot_dt and t_end must be positive");
                }
            }
            Config::Thm4Ratio(c) => {
                if c.targets.is_empty() || c.targets.iter().any(|t| t.len() != 2 || t.iter().any(|x| *x == 0.0)) {
                    return bad("targets must be nonzero pairs");
                }
                if !(c.init_frac < 1.0 && c.progress > 0.0 && c.progress < 1.0) {
                    return bad("init_frac must be below 1 and progress in (0, 1)");
                }
            }
            Config::ThetaTables(c) => {
                if c.points < 2 || !(c.r_min < c.r_max) {
                    return bad("need two or more points on a nonempty range");
                }
            }
            Config::CriticalPoints(c) => {
                if c.centers.len() != 2 || c.centers[0].len() != c.centers[1].len() {
                    return bad("need two centers of equal dimension");
                }
                if !(c.span > 0.0 && c.grid > 0.0) {
                    return bad("span and grid must be positive");
                }
            }
            Config::HbltCooccur(c) => {
                c.spec.validate()?;
                if c.samples == 0 {
                    return bad("samples must be positive");
                }
            }
            Config::Table1Ncorr(c) => {
                c.setup.validate()?;
                if c.seeds == 0 || c.eval_samples < 2 {
                    return bad("need a seed and at least two eval samples");
                }
                if c.setup.corpus.depth() < 3 || c.setup.layers < 2 {
                    return bad("NCorr compares two latent layers with two transformer layers");
                }
            }
            Config::EntropyLrSweep(c) => {
                c.setup.validate()?;
                if c.lrs.is_empty() {
                    return bad("need at least one learning rate");
                }
            }
            Config::RankSeries(c) => c.setup.validate()?,
        }
        Ok(())
    }
}

impl TrainSetup {
    pub fn validate(&self) -> Result<(), CliError> {
        self.corpus.validate()?;
        self.train_config(0).validate()?;
        if self.train_samples == 0 || self.val_samples == 0 {
            return Err(CliError::Config("train and validation sets must be nonempty".into()));
        }
        Ok(())
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

fn resolve_path(root: &Value, key: &str) -> Result<Vec<String>, CliError> {
    if key.contains('.') {
        let path: Vec<String> = key.split('.').map(str::to_string).collect();
        let mut cur = root;
        for p in &path {
            cur = cur
                .get(p.as_str())
                .ok_or_else(|| CliError::Config(format!("no field {key}")))?;
        }
        return Ok(path);
    }
    let mut found = Vec::new();
    find(root, key, &mut Vec::new(), &mut found);
    match found.len() {
        0 => Err(CliError::Config(format!("no field named {key}"))),
        1 => Ok(found.pop().unwrap()),
        _ => Err(CliError::Config(format!(
            "field {key} is ambiguous: {}",
            found.iter().map(|p| p.join(".")).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn find(v: &Value, key: &str, path: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
    if let Value::Object(m) = v {
        for (k, child) in m {
            path.push(k.clone());
            if k == key && k != "experiment" {
                out.push(path.clone());
            }
            find(child, key, path, out);
            path.pop();
        }
    }
}
