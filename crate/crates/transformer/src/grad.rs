//! Reverse-mode gradients of the training objective.

use crate::config::{LossPositions, Objective, TrainConfig};
use crate::forward::{attention_backward, forward, Example, Trace};
use crate::model::{ModelParams, Trainable};
use crate::Result;
use joma_num::Exec;

/// Examples per work item. Partial gradients are summed in chunk order, so
/// results do not depend on scheduling.
const CHUNK: usize = 4;

fn loss_positions(t_len: usize, at: LossPositions) -> std::ops::Range<usize> {
    match at {
        LossPositions::All => 0..t_len,
        LossPositions::Last => t_len - 1..t_len,
    }
}

/// Payoff weight `g_k` of hidden node `k` for class `y`.
pub fn payoff_weight(k: usize, y: usize, classes: usize) -> f64 {
    let hit = if k % classes == y { 1.0 } else { 0.0 };
    hit - 1.0 / classes as f64
}

/// Loss of one example (summed over its loss positions) and its gradient,
/// scaled by `weight`, accumulated into `g`.
fn example_backward(
    params: &ModelParams,
    ex: &Example,
    tr: &Trace,
    cfg: &TrainConfig,
    weight: f64,
    g: &mut Trainable,
) -> f64 {
    let dims = params.dims;
    let (t_len, d, k, c) = (ex.tokens.len(), dims.d, dims.hidden, dims.classes);
    let s_top = dims.layers - 1;
    let toks = &ex.tokens;
    let mut loss = 0.0;

    // Gradients w.r.t. the top layer's outputs and hidden values.
    let mut d_o = vec![0.0; t_len * d];
    let mut d_h_top = vec![0.0; t_len * k];
    let top = &tr.layers[s_top];
    for t in loss_positions(t_len, cfg.loss_at) {
        match cfg.objective {
            Objective::CrossEntropy => {
                let z = &tr.logits[t * c..(t + 1) * c];
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                loss += lse - z[ex.class];
                let ot = &top.o[t * d..(t + 1) * d];
                let dot = &mut d_o[t * d..(t + 1) * d];
                for cc in 0..c {
                    let p = (z[cc] - lse).exp();
                    let gz = weight * (p - if cc == ex.class { 1.0 } else { 0.0 });
                    for (gw, x) in g.classifier.row_mut(cc).iter_mut().zip(ot) {
                        *gw += gz * x;
                    }
                    for (x, w) in dot.iter_mut().zip(params.train.classifier.row(cc)) {
                        *x += gz * w;
                    }
                }
            }
            Objective::NodePayoff => {
                for kk in 0..k {
                    let gk = payoff_weight(kk, ex.class, c);
                    loss -= gk * top.h[t * k + kk];
                    d_h_top[t * k + kk] -= weight * gk;
                }
            }
        }
    }

    for s in (0..dims.layers).rev() {
        let layer = &params.train.layers[s];
        let lt = &tr.layers[s];
        let gl = &mut g.layers[s];
        let mut d_f = d_o.clone();
        for t in 0..t_len {
            let dot = &d_o[t * d..(t + 1) * d];
            let ft = &lt.f[t * d..(t + 1) * d];
            let dft = &mut d_f[t * d..(t + 1) * d];
            for kk in 0..k {
                let hv = lt.h[t * k + kk];
                let mut dh: f64 = layer.upper.row(kk).iter().zip(dot).map(|(a, b)| a * b).sum();
                if s == s_top {
                    dh += d_h_top[t * k + kk];
                }
                if hv != 0.0 {
                    for (gu, x) in gl.upper.row_mut(kk).iter_mut().zip(dot) {
                        *gu += hv * x;
                    }
                }
                let dp = dh * cfg.activation.derivative(lt.pre[t * k + kk]);
                if dp != 0.0 {
                    for (gw, x) in gl.lower.row_mut(kk).iter_mut().zip(ft) {
                        *gw += dp * x;
                    }
                    for (x, w) in dft.iter_mut().zip(layer.lower.row(kk)) {
                        *x += dp * w;
                    }
                }
            }
        }

        // Through f_t = Σ_{t'} a_{tt'} e_{t'} + r_t.
        let value = |t: usize| -> &[f64] {
            if s == 0 {
                params.emb_c.row(toks[t])
            } else {
                &tr.layers[s - 1].o[t * d..(t + 1) * d]
            }
        };
        let mut d_prev = if s > 0 { d_f.clone() } else { Vec::new() };
        for t in 0..t_len {
            let a = &lt.attn[t];
            let dft = &d_f[t * d..(t + 1) * d];
            let da: Vec<f64> = (0..a.len()).map(|tp| value(tp).iter().zip(dft).map(|(x, y)| x * y).sum()).collect();
            let dz = attention_backward(a, &da, cfg.attention);
            let zrow = gl.z.row_mut(toks[t]);
            for (tp, dzv) in dz.iter().enumerate() {
                zrow[toks[tp]] += dzv;
            }
            if s > 0 {
                for (tp, w) in a.iter().enumerate() {
                    let dst = &mut d_prev[tp * d..(tp + 1) * d];
                    for (x, y) in dst.iter_mut().zip(dft) {
                        *x += w * y;
                    }
                }
            }
        }
        d_o = d_prev;
    }
    loss
}

/// Number of loss terms in `batch`.
pub fn loss_terms(batch: &[Example], at: LossPositions) -> usize {
    batch.iter().map(|e| loss_positions(e.tokens.len(), at).len()).sum()
}

/// Mean loss over the loss positions of `batch` and its exact gradient.
/// Embeddings are fixed and get no gradient.
pub fn loss_and_grads(params: &ModelParams, batch: &[Example], cfg: &TrainConfig, exec: Exec) -> Result<(f64, Trainable)> {
    let n = loss_terms(batch, cfg.loss_at).max(1) as f64;
    let weight = 1.0 / n;
    let chunks = batch.len().div_ceil(CHUNK);
    let parts = exec.map(chunks, |ci| -> Result<(f64, Trainable)> {
        let mut g = params.train.zeros_like();
        let mut loss = 0.0;
        for ex in &batch[ci * CHUNK..((ci + 1) * CHUNK).min(batch.len())] {
            let tr = forward(params, ex, cfg.arch())?;
            loss += example_backward(params, ex, &tr, cfg, weight, &mut g);
        }
        Ok((loss, g))
    });
    let mut total = 0.0;
    let mut grads = params.train.zeros_like();
    for p in parts {
        let (l, g) = p?;
        total += l;
        grads.add_assign(&g);
    }
    Ok((total / n, grads))
}

/// Mean loss only.
pub fn mean_loss(params: &ModelParams, batch: &[Example], cfg: &TrainConfig, exec: Exec) -> Result<f64> {
    let at = cfg.loss_at;
    let n = loss_terms(batch, at).max(1) as f64;
    let parts = exec.map(batch.len(), |i| -> Result<f64> {
        let ex = &batch[i];
        let tr = forward(params, ex, cfg.arch())?;
        let (c, k) = (params.dims.classes, params.dims.hidden);
        let top = tr.layers.last().expect("at least one layer");
        Ok(loss_positions(ex.tokens.len(), at)
            .map(|t| match cfg.objective {
                Objective::CrossEntropy => {
                    let z = &tr.logits[t * c..(t + 1) * c];
                    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln() - z[ex.class]
                }
                Objective::NodePayoff => -(0..k).map(|kk| payoff_weight(kk, ex.class, c) * top.h[t * k + kk]).sum::<f64>(),
            })
            .sum())
    });
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    Ok(total / n)
}

/// Largest relative error between [`loss_and_grads`] and central
/// differences of step `h`, over every trainable entry. Relative error is
/// `|a − n| / max(|a|, |n|, 1e-6)`.
pub fn gradcheck(params: &ModelParams, batch: &[Example], cfg: &TrainConfig, h: f64) -> Result<f64> {
    let (_, g) = loss_and_grads(params, batch, cfg, Exec::Serial)?;
    let mut p = params.clone();
    let mut worst = 0.0f64;
    for ti in 0..g.tensors().len() {
        for i in 0..g.tensors()[ti].as_slice().len() {
            let orig = p.train.tensors()[ti].as_slice()[i];
            p.train.tensors_mut()[ti].as_mut_slice()[i] = orig + h;
            let up = mean_loss(&p, batch, cfg, Exec::Serial)?;
            p.train.tensors_mut()[ti].as_mut_slice()[i] = orig - h;
            let down = mean_loss(&p, batch, cfg, Exec::Serial)?;
            p.train.tensors_mut()[ti].as_mut_slice()[i] = orig;
            let num = (up - down) / (2.0 * h);
            let ana = g.tensors()[ti].as_slice()[i];
            worst = worst.max((ana - num).abs() / ana.abs().max(num.abs()).max(1e-6));
        }
    }
    Ok(worst)
}
