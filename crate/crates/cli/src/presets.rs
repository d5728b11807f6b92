//! Named configurations: the Table 1 grid and desk-scale training runs.

use crate::config::{LrSweepConfig, RankConfig, Table1Config, TrainSetup};
use crate::error::CliError;
use joma_dynamics::AttentionKind;
use joma_hblt::HbltSpec;
use joma_transformer::{Activation, LossPositions, Objective, Optimizer, Window};

pub const VOCAB: usize = 100;
pub const SEQ_LEN: usize = 30;
/// Edge uncertainty of the desk-scale corpora.
pub const RHO: f64 = 0.98;

/// Table 1 grid: classes, children per latent, latents per layer.
pub const TABLE1_GRID: [(usize, usize, [usize; 2]); 12] = [
    (20, 2, [10, 20]),
    (20, 3, [10, 20]),
    (20, 2, [20, 30]),
    (20, 3, [20, 30]),
    (30, 2, [10, 20]),
    (30, 3, [10, 20]),
    (30, 2, [20, 30]),
    (30, 3, [20, 30]),
    (50, 2, [10, 20]),
    (50, 3, [10, 20]),
    (50, 2, [20, 30]),
    (50, 3, [20, 30]),
];

pub fn table1_name(classes: usize, children: usize, layers: [usize; 2]) -> String {
    format!("c{classes}-nch{children}-n{}-{}", layers[0], layers[1])
}

pub fn names() -> Vec<String> {
    let mut out: Vec<String> = TABLE1_GRID.iter().map(|(c, n, l)| table1_name(*c, *n, *l)).collect();
    out.push("lr-sweep".into());
    out.push("rank-series".into());
    out
}

fn corpus(classes: usize, children: usize, layers: [usize; 2]) -> HbltSpec {
    HbltSpec::uniform(classes, RHO, layers.to_vec(), children, VOCAB, SEQ_LEN)
}

fn setup(corpus: HbltSpec, layers: usize) -> TrainSetup {
    TrainSetup {
        corpus,
        train_samples: 20_000,
        val_samples: 200,
        d: 2 * VOCAB,
        hidden: 64,
        layers,
        objective: Objective::CrossEntropy,
        optimizer: Optimizer::adam(),
        lr: 3e-3,
        steps: 600,
        batch: 32,
        activation: Activation::Relu,
        attention: AttentionKind::Softmax,
        window: Window::Causal,
        loss_at: LossPositions::All,
        stride: 20,
        init_scale: 1.0,
    }
}

pub fn table1(name: &str) -> Result<Table1Config, CliError> {
    let (c, n, l) = TABLE1_GRID
        .iter()
        .find(|(c, n, l)| table1_name(*c, *n, *l) == name)
        .ok_or_else(|| CliError::Config(format!("unknown table1 preset {name}")))?;
    Ok(Table1Config {
        setup: setup(corpus(*c, *n, *l), 3),
        eval_samples: 1000,
        seeds: 5,
        seed: 0,
    })
}

pub fn lr_sweep() -> LrSweepConfig {
    LrSweepConfig {
        setup: setup(corpus(20, 2, [10, 20]), 1),
        lrs: vec![1e-3, 3e-3, 1e-2],
        seed: 0,
    }
}

pub fn rank_series() -> RankConfig {
    RankConfig {
        setup: setup(corpus(20, 2, [10, 20]), 3),
        seed: 0,
    }
}
