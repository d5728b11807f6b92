use crate::algebra::m_matrix;
use crate::sample::SequenceSample;
use crate::tree::LatentTree;
use crate::{HbltError, Result};

/// Latent count above which [`exact_cooccur`] refuses to enumerate.
pub const ENUMERATION_LIMIT: usize = 24;

/// `P[y_l = 1 | y_m = 1]` for two tokens whose common latent ancestor
/// sits `h` levels above them, in a hierarchy of depth `depth`:
/// `½ (1 + ρ^{2H} − 2ρ^{L−1}ρ₀) / (1 − ρ^{L−1}ρ₀)`.
pub fn analytic_cooccur(rho: f64, depth: usize, h: usize, rho0: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(HbltError::Domain(rho));
    }
    if depth < 2 || h > depth - 1 {
        return Err(HbltError::InvalidSpec(format!("CLA height {h} outside [1, {}]", depth.saturating_sub(1))));
    }
    let top = rho.powi(depth as i32 - 1) * rho0;
    let denom = 1.0 - top;
    if denom.abs() < 1e-15 {
        return Err(HbltError::Singular);
    }
    Ok(0.5 * (1.0 + rho.powi(2 * h as i32) - 2.0 * top) / denom)
}

/// [`analytic_cooccur`] for a concrete token pair, with `ρ₀` of the top
/// latent the pair descends from.
pub fn analytic_cooccur_pair(tree: &LatentTree, l: usize, m: usize) -> Result<f64> {
    match tree.cla(l, m)? {
        Some((h, top)) => analytic_cooccur(tree.spec.rho, tree.spec.depth(), h, tree.rho0(top)),
        None => Err(HbltError::InvalidSpec(format!("tokens {l} and {m} share no latent ancestor"))),
    }
}

/// Leading-order value `1 − H/L` for `ρ = ρ₀ = 1 − ε`; error `O(ε²)`.
pub fn approx_cooccur(h: usize, depth: usize) -> f64 {
    1.0 - h as f64 / depth as f64
}

/// `P[y_l = 1 | y_m = 1]` by summing the joint over every latent
/// configuration and class.
pub fn exact_cooccur(tree: &LatentTree, l: usize, m: usize) -> Result<f64> {
    let n_latent: usize = tree.sizes[..tree.leaf_layer()].iter().sum();
    if n_latent > ENUMERATION_LIMIT {
        return Err(HbltError::TooLarge(n_latent, ENUMERATION_LIMIT));
    }
    let leaf = tree.leaf_layer();
    for t in [l, m] {
        if t >= tree.sizes[leaf] {
            return Err(HbltError::Token(t));
        }
    }
    let edge = m_matrix(tree.spec.rho)?;
    // Flat node offsets per latent layer.
    let mut offset = vec![0usize; leaf + 1];
    for s in 0..leaf {
        offset[s + 1] = offset[s] + tree.sizes[s];
    }
    let bit = |cfg: u32, s: usize, i: usize| ((cfg >> (offset[s] + i)) & 1) as usize;
    let on = |cfg: u32, t: usize| edge[1][bit(cfg, leaf - 1, tree.parents[leaf][t])];

    let (mut joint, mut marginal) = (0.0, 0.0);
    for cfg in 0u32..(1u32 << n_latent) {
        let mut prior = 0.0;
        for (k, pk) in tree.spec.class_probs.iter().enumerate() {
            if *pk == 0.0 {
                continue;
            }
            let mut p = *pk;
            for j in 0..tree.sizes[0] {
                let q = tree.class_on[k][j];
                p *= if bit(cfg, 0, j) == 1 { q } else { 1.0 - q };
            }
            prior += p;
        }
        let mut p = prior;
        for s in 1..leaf {
            for i in 0..tree.sizes[s] {
                p *= edge[bit(cfg, s, i)][bit(cfg, s - 1, tree.parents[s][i])];
            }
        }
        let pm = on(cfg, m);
        marginal += p * pm;
        joint += p * pm * if l == m { 1.0 } else { on(cfg, l) };
    }
    if marginal == 0.0 {
        return Err(HbltError::ZeroMarginal(m));
    }
    Ok(joint / marginal)
}

/// Counts behind an empirical co-occurrence estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CooccurStats {
    pub l: usize,
    pub m: usize,
    pub joint: u64,
    pub marginal: u64,
}

impl CooccurStats {
    pub fn estimate(&self) -> f64 {
        self.joint as f64 / self.marginal as f64
    }

    /// Binomial standard error of [`estimate`](Self::estimate).
    pub fn std_err(&self) -> f64 {
        let p = self.estimate();
        (p * (1.0 - p) / self.marginal as f64).sqrt()
    }
}

/// Counts leaf activations of `l` among samples where `m` is active.
pub fn empirical_cooccur(samples: &[SequenceSample], l: usize, m: usize) -> Result<CooccurStats> {
    let (mut joint, mut marginal) = (0u64, 0u64);
    for s in samples {
        let leaves = s.leaves();
        let (Some(&yl), Some(&ym)) = (leaves.get(l), leaves.get(m)) else {
            return Err(HbltError::Token(l.max(m)));
        };
        if ym {
            marginal += 1;
            joint += yl as u64;
        }
    }
    if marginal == 0 {
        return Err(HbltError::ZeroMarginal(m));
    }
    Ok(CooccurStats { l, m, joint, marginal })
}
