//! Forward pass over one sequence.
//!
//! At position `t` a layer attends over its window (the inclusive prefix
//! `0..=t` by default) with logits `Z[tok_t, tok_t']`. Layer 0 attends
//! over the context embeddings of the window tokens, so its attended vector
//! is `U_C b` with `b = σ(z_q) ∘ x / A` for the window frequency vector `x`; its residual
//! is the query embedding. Deeper layers attend over, and add as residual,
//! the previous layer's outputs.

use crate::config::Arch;
use crate::model::ModelParams;
use crate::{Result, TransformerError};
use joma_dynamics::AttentionKind;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub tokens: Vec<usize>,
    pub class: usize,
}

impl From<&joma_hblt::SequenceSample> for Example {
    fn from(s: &joma_hblt::SequenceSample) -> Self {
        Self {
            tokens: s.tokens.clone(),
            class: s.class,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerTrace {
    /// `attn[t][t']` for `t' ≤ t`.
    pub attn: Vec<Vec<f64>>,
    /// Row-major `T × d`.
    pub f: Vec<f64>,
    /// Row-major `T × K`.
    pub pre: Vec<f64>,
    pub h: Vec<f64>,
    /// Row-major `T × d`.
    pub o: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub layers: Vec<LayerTrace>,
    /// Row-major `T × D`, from the top layer's output.
    pub logits: Vec<f64>,
}

/// Attention weights over a window given the logits of its positions.
pub(crate) fn attention_weights(scores: &[f64], kind: AttentionKind) -> Result<Vec<f64>> {
    let n = scores.len() as f64;
    Ok(match kind {
        AttentionKind::Linear => scores.iter().map(|s| s / n).collect(),
        AttentionKind::Exp { normalizer } => scores.iter().map(|s| s.exp() / (normalizer * n)).collect(),
        AttentionKind::Softmax => {
            let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
            let sum: f64 = e.iter().sum();
            if !(sum > 0.0 && sum.is_finite()) {
                return Err(TransformerError::DegenerateAttention);
            }
            e.into_iter().map(|v| v / sum).collect()
        }
    })
}

/// Chain rule through [`attention_weights`]: gradient on the logits given
/// the gradient `da` on the weights `a`.
pub(crate) fn attention_backward(a: &[f64], da: &[f64], kind: AttentionKind) -> Vec<f64> {
    let n = a.len() as f64;
    match kind {
        AttentionKind::Linear => da.iter().map(|g| g / n).collect(),
        AttentionKind::Exp { .. } => a.iter().zip(da).map(|(a, g)| a * g).collect(),
        AttentionKind::Softmax => {
            let s: f64 = a.iter().zip(da).map(|(a, g)| a * g).sum();
            a.iter().zip(da).map(|(a, g)| a * (g - s)).collect()
        }
    }
}

fn check_example(params: &ModelParams, ex: &Example) -> Result<()> {
    if ex.tokens.is_empty() {
        return Err(TransformerError::Dimension("empty sequence".into()));
    }
    if let Some(t) = ex.tokens.iter().find(|t| **t >= params.dims.vocab) {
        return Err(TransformerError::Dimension(format!("token {t} outside vocabulary")));
    }
    if ex.class >= params.dims.classes {
        return Err(TransformerError::Dimension(format!("class {} outside label set", ex.class)));
    }
    Ok(())
}

pub fn forward(params: &ModelParams, ex: &Example, arch: Arch) -> Result<Trace> {
    check_example(params, ex)?;
    let dims = params.dims;
    let (t_len, d, k) = (ex.tokens.len(), dims.d, dims.hidden);
    let toks = &ex.tokens;

    let mut layers: Vec<LayerTrace> = Vec::with_capacity(dims.layers);
    for (s, layer) in params.train.layers.iter().enumerate() {
        let value = |t: usize| -> &[f64] {
            if s == 0 {
                params.emb_c.row(toks[t])
            } else {
                &layers[s - 1].o[t * d..(t + 1) * d]
            }
        };
        let residual = |t: usize| -> &[f64] {
            if s == 0 {
                params.emb_q.row(toks[t])
            } else {
                &layers[s - 1].o[t * d..(t + 1) * d]
            }
        };
        let mut attn = Vec::with_capacity(t_len);
        let mut f = vec![0.0; t_len * d];
        let mut pre = vec![0.0; t_len * k];
        let mut h = vec![0.0; t_len * k];
        let mut o = vec![0.0; t_len * d];
        for t in 0..t_len {
            let zq = layer.z.row(toks[t]);
            let scores: Vec<f64> = toks[..arch.window.end(t, t_len)].iter().map(|&l| zq[l]).collect();
            let a = attention_weights(&scores, arch.attention)?;
            let ft = &mut f[t * d..(t + 1) * d];
            ft.copy_from_slice(residual(t));
            for (tp, w) in a.iter().enumerate() {
                for (x, v) in ft.iter_mut().zip(value(tp)) {
                    *x += w * v;
                }
            }
            let ot = &mut o[t * d..(t + 1) * d];
            ot.copy_from_slice(ft);
            for kk in 0..k {
                let p: f64 = layer.lower.row(kk).iter().zip(ft.iter()).map(|(a, b)| a * b).sum();
                let hv = arch.activation.apply(p);
                pre[t * k + kk] = p;
                h[t * k + kk] = hv;
                if hv != 0.0 {
                    for (x, u) in ot.iter_mut().zip(layer.upper.row(kk)) {
                        *x += hv * u;
                    }
                }
            }
            attn.push(a);
        }
        layers.push(LayerTrace { attn, f, pre, h, o });
    }

    let top = &layers.last().expect("at least one layer").o;
    let c = dims.classes;
    let mut logits = vec![0.0; t_len * c];
    for t in 0..t_len {
        let ot = &top[t * d..(t + 1) * d];
        for cc in 0..c {
            logits[t * c + cc] = params.train.classifier.row(cc).iter().zip(ot).map(|(a, b)| a * b).sum();
        }
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(TransformerError::NonFinite);
    }
    Ok(Trace { layers, logits })
}
