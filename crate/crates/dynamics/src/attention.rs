use crate::{DynError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AttentionKind {
    Linear,
    /// `exp(z) ∘ x / normalizer`
    Exp { normalizer: f64 },
    Softmax,
}

impl AttentionKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            AttentionKind::Exp { normalizer } if !(*normalizer > 0.0 && normalizer.is_finite()) => {
                Err(DynError::Invalid(format!("exp normalizer must be positive, got {normalizer}")))
            }
            _ => Ok(()),
        }
    }
}

/// Attention-weighted token frequencies `b` for logits `z` and input
/// frequencies `x`.
pub fn attention_reweight(z: &[f64], x: &[f64], kind: AttentionKind) -> Result<Vec<f64>> {
    if z.len() != x.len() {
        return Err(DynError::Dimension(format!("z has {} entries, x has {}", z.len(), x.len())));
    }
    if x.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(DynError::Invalid("frequencies must be finite and nonnegative".into()));
    }
    kind.validate()?;
    Ok(match kind {
        AttentionKind::Linear => z.iter().zip(x).map(|(z, x)| z * x).collect(),
        AttentionKind::Exp { normalizer } => {
            z.iter().zip(x).map(|(z, x)| z.exp() * x / normalizer).collect()
        }
        AttentionKind::Softmax => {
            // Shift by the max over the support of x for stability.
            let m = z
                .iter()
                .zip(x)
                .filter(|(_, x)| **x > 0.0)
                .map(|(z, _)| *z)
                .fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return Err(DynError::DegenerateSoftmax);
            }
            let e: Vec<f64> = z.iter().zip(x).map(|(z, x)| (z - m).exp() * x).collect();
            let s: f64 = e.iter().sum();
            if !(s > 0.0) {
                return Err(DynError::DegenerateSoftmax);
            }
            e.into_iter().map(|v| v / s).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definitions() {
        let b = attention_reweight(&[1.0, 2.0], &[0.5, 0.5], AttentionKind::Linear).unwrap();
        assert_eq!(b, vec![0.5, 1.0]);
        let b = attention_reweight(&[0.0, 0.0], &[0.5, 0.5], AttentionKind::Softmax).unwrap();
        assert_eq!(b, vec![0.5, 0.5]);
        let b = attention_reweight(&[0.0, 2f64.ln()], &[1.0, 1.0], AttentionKind::Exp { normalizer: 1.0 }).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-15 && (b[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_softmax() {
        let r = attention_reweight(&[0.0, 0.0], &[0.0, 0.0], AttentionKind::Softmax);
        assert_eq!(r, Err(DynError::DegenerateSoftmax));
    }

    #[test]
    fn rejects_bad_normalizer() {
        let r = attention_reweight(&[0.0], &[1.0], AttentionKind::Exp { normalizer: 0.0 });
        assert!(r.is_err());
    }
}
