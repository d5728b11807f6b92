use crate::{HbltError, Result};
use serde::{Deserialize, Serialize};

/// Generative model parameters.
///
/// `latents_per_layer` lists the latent counts from the layer directly
/// below the class label down to the layer directly above the tokens, so
/// the hierarchy depth is `L = latents_per_layer.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbltSpec {
    pub classes: usize,
    pub class_probs: Vec<f64>,
    pub rho: f64,
    pub latents_per_layer: Vec<usize>,
    pub children: usize,
    pub vocab: usize,
    pub seq_len: usize,
}

impl HbltSpec {
    /// Uniform class distribution.
    pub fn uniform(classes: usize, rho: f64, latents_per_layer: Vec<usize>, children: usize, vocab: usize, seq_len: usize) -> Self {
        Self {
            classes,
            class_probs: vec![1.0 / classes.max(1) as f64; classes],
            rho,
            latents_per_layer,
            children,
            vocab,
            seq_len,
        }
    }

    pub fn depth(&self) -> usize {
        self.latents_per_layer.len() + 1
    }

    pub fn latent_count(&self) -> usize {
        self.latents_per_layer.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HbltError::InvalidSpec(m));
        if self.classes == 0 || self.class_probs.len() != self.classes {
            return bad(format!("{} class probabilities for {} classes", self.class_probs.len(), self.classes));
        }
        if self.class_probs.iter().any(|p| !(*p >= 0.0)) || (self.class_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("class probabilities must be nonnegative and sum to 1".into());
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(HbltError::Domain(self.rho));
        }
        if self.latents_per_layer.is_empty() {
            return bad("at least one latent layer is required".into());
        }
        if self.children == 0 || self.seq_len == 0 {
            return bad("children and sequence length must be positive".into());
        }
        let mut sizes = self.latents_per_layer.clone();
        sizes.push(self.vocab);
        if sizes[0] == 0 {
            return bad("top layer is empty".into());
        }
        for w in sizes.windows(2) {
            if w[1] < w[0] {
                return bad(format!("layer of {} nodes cannot give every one of {} parents a child", w[1], w[0]));
            }
        }
        Ok(())
    }
}

/// Wired tree. Layer 0 holds the latents directly below the class label
/// and the last layer holds the token leaves. Node `i` of layer `s > 0`
/// has parent `i mod N_{s-1}` (round-robin), and class `k` designates
/// top latent `k mod N_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentTree {
    pub spec: HbltSpec,
    pub sizes: Vec<usize>,
    pub parents: Vec<Vec<usize>>,
    /// `class_on[k][j] = P[top latent j = 1 | class k]`.
    pub class_on: Vec<Vec<f64>>,
}

impl LatentTree {
    pub fn new(spec: &HbltSpec) -> Result<Self> {
        spec.validate()?;
        let mut sizes = spec.latents_per_layer.clone();
        sizes.push(spec.vocab);
        let mut parents = vec![Vec::new()];
        for s in 1..sizes.len() {
            parents.push((0..sizes[s]).map(|i| i % sizes[s - 1]).collect());
        }
        let (hi, lo) = (0.5 * (1.0 + spec.rho), 0.5 * (1.0 - spec.rho));
        let class_on = (0..spec.classes)
            .map(|k| (0..sizes[0]).map(|j| if j == k % sizes[0] { hi } else { lo }).collect())
            .collect();
        Ok(Self {
            spec: spec.clone(),
            sizes,
            parents,
            class_on,
        })
    }

    pub fn layers(&self) -> usize {
        self.sizes.len()
    }

    pub fn leaf_layer(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Height above the tokens of nodes in `layer`.
    pub fn height(&self, layer: usize) -> usize {
        self.leaf_layer() - layer
    }

    /// Ancestors of node `i` in `layer`, nearest first, ending at layer 0.
    pub fn ancestors(&self, layer: usize, i: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(layer);
        let mut cur = i;
        for s in (1..=layer).rev() {
            cur = self.parents[s][cur];
            out.push(cur);
        }
        out
    }

    /// Height of the common latent ancestor of tokens `l` and `m`, and the
    /// top-layer latent it descends from. `None` when the tokens only
    /// meet at the class label. Equal tokens have `H = 0`.
    pub fn cla(&self, l: usize, m: usize) -> Result<Option<(usize, usize)>> {
        let leaf = self.leaf_layer();
        for t in [l, m] {
            if t >= self.sizes[leaf] {
                return Err(HbltError::Token(t));
            }
        }
        if l == m {
            let top = self.ancestors(leaf, l).last().copied().unwrap_or(l);
            return Ok(Some((0, top)));
        }
        let (al, am) = (self.ancestors(leaf, l), self.ancestors(leaf, m));
        for (h, (a, b)) in al.iter().zip(&am).enumerate() {
            if a == b {
                return Ok(Some((h + 1, *al.last().unwrap())));
            }
        }
        Ok(None)
    }

    /// `ρ₀ = p_{·|0}ᵀ p₀` for top latent `j`, with `p_{k|0} = 2P[y_j = 0 | class k] − 1`.
    pub fn rho0(&self, j: usize) -> f64 {
        self.class_on
            .iter()
            .zip(&self.spec.class_probs)
            .map(|(on, p)| p * (1.0 - 2.0 * on[j]))
            .sum()
    }

    /// Lexicographically first token pair whose CLA has height `h`.
    pub fn pair_with_cla(&self, h: usize) -> Option<(usize, usize)> {
        let n = self.sizes[self.leaf_layer()];
        (0..n).flat_map(|l| (0..n).map(move |m| (l, m))).find(|&(l, m)| matches!(self.cla(l, m), Ok(Some((hh, _))) if hh == h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LatentTree {
        LatentTree::new(&HbltSpec::uniform(2, 0.7, vec![2, 4], 2, 8, 5)).unwrap()
    }

    #[test]
    fn round_robin_wiring() {
        let t = small();
        assert_eq!(t.parents[1], vec![0, 1, 0, 1]);
        assert_eq!(t.parents[2], vec![0, 1, 2, 3, 0, 1, 2, 3]);
        assert_eq!(t.cla(0, 4).unwrap(), Some((1, 0)));
        assert_eq!(t.cla(0, 2).unwrap(), Some((2, 0)));
        assert_eq!(t.cla(0, 1).unwrap(), None);
        assert_eq!(t.cla(3, 3).unwrap(), Some((0, 1)));
    }

    #[test]
    fn rho0_from_designation() {
        // Two classes, two top latents: each latent is designated by one
        // class of mass ½, so ρ₀ = ρ(1 − 2·½) = 0.
        assert!(small().rho0(0).abs() < 1e-15);
        let t = LatentTree::new(&HbltSpec::uniform(4, 0.5, vec![2, 4], 2, 8, 5)).unwrap();
        assert!((t.rho0(1) - 0.0).abs() < 1e-15);
        let t = LatentTree::new(&HbltSpec::uniform(1, 0.5, vec![2, 4], 2, 8, 5)).unwrap();
        assert!((t.rho0(0) + 0.5).abs() < 1e-15 && (t.rho0(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_inconsistent_layers() {
        assert!(HbltSpec::uniform(2, 0.5, vec![4, 2], 2, 8, 5).validate().is_err());
        assert!(HbltSpec::uniform(2, 1.5, vec![2], 2, 8, 5).validate().is_err());
    }
}
