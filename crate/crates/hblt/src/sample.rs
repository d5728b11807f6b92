use crate::tree::LatentTree;
use crate::{HbltError, Result};
use joma_num::{Exec, RngSeed};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Resampling budget for draws in which no leaf is active.
pub const MAX_RESAMPLES: usize = 100;

/// Samples per RNG substream. Fixed so the corpus does not depend on the
/// number of workers.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceSample {
    pub class: usize,
    /// Binary value of every node, per layer; the last layer is the leaves.
    pub latents: Vec<Vec<bool>>,
    pub tokens: Vec<usize>,
}

impl SequenceSample {
    pub fn leaves(&self) -> &[bool] {
        self.latents.last().expect("at least one layer")
    }
}

fn draw_class<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

fn draw_one<R: Rng>(tree: &LatentTree, rng: &mut R) -> Result<SequenceSample> {
    let spec = &tree.spec;
    let (hi, lo) = (0.5 * (1.0 + spec.rho), 0.5 * (1.0 - spec.rho));
    for _ in 0..MAX_RESAMPLES {
        let class = draw_class(&spec.class_probs, rng);
        let mut latents = Vec::with_capacity(tree.layers());
        latents.push(tree.class_on[class].iter().map(|p| rng.random::<f64>() < *p).collect::<Vec<bool>>());
        for s in 1..tree.layers() {
            let layer: Vec<bool> = tree.parents[s]
                .iter()
                .map(|&p| rng.random::<f64>() < if latents[s - 1][p] { hi } else { lo })
                .collect();
            latents.push(layer);
        }
        let active: Vec<usize> = latents[tree.leaf_layer()]
            .iter()
            .enumerate()
            .filter_map(|(i, on)| on.then_some(i))
            .collect();
        if active.is_empty() {
            continue;
        }
        let tokens = (0..spec.seq_len).map(|_| active[rng.random_range(0..active.len())]).collect();
        return Ok(SequenceSample { class, latents, tokens });
    }
    Err(HbltError::EmptyActiveSet(MAX_RESAMPLES))
}

/// Draws `n` sequences top-down. Chunks of samples use independent
/// substreams of `seed`, so the result is identical for any `exec`.
pub fn sample(tree: &LatentTree, n: usize, seed: RngSeed, exec: Exec) -> Result<Vec<SequenceSample>> {
    let chunks = n.div_ceil(CHUNK);
    let parts = exec.map(chunks, |c| {
        let mut rng = seed.substream(c as u64);
        let len = CHUNK.min(n - c * CHUNK);
        (0..len).map(|_| draw_one(tree, &mut rng)).collect::<Result<Vec<_>>>()
    });
    let mut out = Vec::with_capacity(n);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}
