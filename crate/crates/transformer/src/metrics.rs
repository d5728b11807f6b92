use crate::config::{Arch, Window};
use crate::forward::{attention_weights, forward, Example};
use crate::model::ModelParams;
use crate::{Result, TransformerError};
use joma_dynamics::AttentionKind;
use joma_num::{entropy, fmt::sig17, stable_rank, Exec, Matrix, RngSeed};
use rand::seq::SliceRandom;
use std::collections::BTreeMap;
use std::io::Write;

/// Entropy of layer `layer`'s attention at position `t`, with weights
/// summed per token (the distribution `b` over context tokens). Linear
/// attention weights are normalized in absolute value first.
pub fn attention_entropy_at(params: &ModelParams, ex: &Example, layer: usize, t: usize, kind: AttentionKind, window: Window) -> Result<f64> {
    let toks = &ex.tokens;
    token_attention_entropy(toks, params.train.layers[layer].z.row(toks[t]), window.end(t, toks.len()), kind)
}

fn token_attention_entropy(tokens: &[usize], zq: &[f64], end: usize, kind: AttentionKind) -> Result<f64> {
    let scores: Vec<f64> = tokens[..end].iter().map(|&l| zq[l]).collect();
    let a = attention_weights(&scores, kind)?;
    let mut per_token: BTreeMap<usize, f64> = BTreeMap::new();
    for (tp, w) in a.iter().enumerate() {
        *per_token.entry(tokens[tp]).or_default() += w;
    }
    let mass: Vec<f64> = per_token.values().map(|v| v.abs()).collect();
    let total: f64 = mass.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(TransformerError::DegenerateAttention);
    }
    let p: Vec<f64> = mass.iter().map(|v| v / total).collect();
    Ok(entropy(&p)?)
}

/// Mean attention entropy per layer over all examples and positions.
pub fn attention_entropy(params: &ModelParams, examples: &[Example], kind: AttentionKind, window: Window, exec: Exec) -> Result<Vec<f64>> {
    let layers = params.dims.layers;
    let parts = exec.map(examples.len(), |i| -> Result<(Vec<f64>, usize)> {
        let toks = &examples[i].tokens;
        let mut sums = vec![0.0; layers];
        for (s, layer) in params.train.layers.iter().enumerate() {
            for t in 0..toks.len() {
                sums[s] += token_attention_entropy(toks, layer.z.row(toks[t]), window.end(t, toks.len()), kind)?;
            }
        }
        Ok((sums, toks.len()))
    });
    let mut total = vec![0.0; layers];
    let mut count = 0usize;
    for p in parts {
        let (s, n) = p?;
        total.iter_mut().zip(&s).for_each(|(a, b)| *a += b);
        count += n;
    }
    Ok(total.into_iter().map(|v| v / count.max(1) as f64).collect())
}

/// Stable rank of every snapshot's lower-layer matrices, indexed
/// `[snapshot][layer]`.
pub fn stable_rank_series(snapshots: &[Vec<Matrix>]) -> Result<Vec<Vec<f64>>> {
    snapshots
        .iter()
        .map(|layers| layers.iter().map(|w| Ok(stable_rank(w)?)).collect())
        .collect()
}

/// Per layer, the maximum of each hidden node's activation over sequence
/// positions: `[layer]` of an `N × K` matrix.
pub fn neuron_max_activations(params: &ModelParams, examples: &[Example], arch: Arch, exec: Exec) -> Result<Vec<Matrix>> {
    let (layers, k) = (params.dims.layers, params.dims.hidden);
    let rows = exec.map(examples.len(), |i| -> Result<Vec<Vec<f64>>> {
        let tr = forward(params, &examples[i], arch)?;
        Ok(tr
            .layers
            .iter()
            .map(|lt| {
                (0..k)
                    .map(|kk| lt.h.iter().skip(kk).step_by(k).copied().fold(f64::NEG_INFINITY, f64::max))
                    .collect()
            })
            .collect())
    });
    let rows: Vec<Vec<Vec<f64>>> = rows.into_iter().collect::<Result<_>>()?;
    (0..layers)
        .map(|s| Ok(Matrix::from_fn(examples.len(), k, |i, kk| rows[i][s][kk])?))
        .collect()
}

/// Best-matching hidden node for every latent of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NcorrLayer {
    pub best_neuron: Vec<usize>,
    pub ncorr: Vec<f64>,
}

impl NcorrLayer {
    pub fn mean(&self) -> f64 {
        self.ncorr.iter().sum::<f64>() / self.ncorr.len().max(1) as f64
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.ncorr.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.ncorr.len().max(1) as f64).sqrt()
    }
}

fn centered_columns(n: usize, cols: usize, get: impl Fn(usize, usize) -> f64) -> Vec<(Vec<f64>, f64)> {
    (0..cols)
        .map(|c| {
            let mean = (0..n).map(|i| get(i, c)).sum::<f64>() / n as f64;
            let v: Vec<f64> = (0..n).map(|i| get(i, c) - mean).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            (v, norm)
        })
        .collect()
}

/// For each latent, the largest normalized correlation with any hidden
/// node's per-sample maximum activation, after centering across samples.
/// A zero-variance column has correlation 0.
///
/// `acts` is `N × K`; `latents[i][j]` is latent `j` of sample `i`.
pub fn ncorr(acts: &Matrix, latents: &[Vec<bool>]) -> Result<NcorrLayer> {
    let n = acts.rows();
    if latents.len() != n || n == 0 {
        return Err(TransformerError::Dimension(format!("{} activation rows, {} latent rows", n, latents.len())));
    }
    let j = latents[0].len();
    let neurons = centered_columns(n, acts.cols(), |i, k| acts.get(i, k));
    let lat = centered_columns(n, j, |i, c| if latents[i][c] { 1.0 } else { 0.0 });
    let mut best_neuron = Vec::with_capacity(j);
    let mut out = Vec::with_capacity(j);
    for (lv, ln) in &lat {
        let mut best = (0usize, 0.0f64);
        for (k, (nv, nn)) in neurons.iter().enumerate() {
            let c = if *ln == 0.0 || *nn == 0.0 {
                0.0
            } else {
                lv.iter().zip(nv).map(|(a, b)| a * b).sum::<f64>() / (ln * nn)
            };
            if c > best.1 || k == 0 {
                best = (k, c);
            }
        }
        best_neuron.push(best.0);
        out.push(best.1);
    }
    Ok(NcorrLayer { best_neuron, ncorr: out })
}

/// [`ncorr`] against latents shuffled across samples.
pub fn permutation_null(acts: &Matrix, latents: &[Vec<bool>], seed: RngSeed) -> Result<NcorrLayer> {
    let mut shuffled = latents.to_vec();
    shuffled.shuffle(&mut seed.rng());
    ncorr(acts, &shuffled)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub step: usize,
    pub loss: f64,
    pub val_loss: f64,
    pub entropy: Vec<f64>,
    pub srank: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsSeries {
    pub rows: Vec<MetricsRow>,
}

impl MetricsSeries {
    pub fn header(layers: usize) -> String {
        let mut cols = vec!["step".to_string(), "loss".into(), "val_loss".into()];
        cols.extend((0..layers).map(|s| format!("entropy_l{s}")));
        cols.extend((0..layers).map(|s| format!("srank_l{s}")));
        cols.join(",")
    }

    pub fn entropy_series(&self, layer: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.entropy[layer]).collect()
    }

    pub fn srank_series(&self, layer: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.srank[layer]).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let layers = self.rows.first().map_or(0, |r| r.entropy.len());
        writeln!(w, "{}", Self::header(layers))?;
        for r in &self.rows {
            let mut cells = vec![r.step.to_string(), sig17(r.loss), sig17(r.val_loss)];
            cells.extend(r.entropy.iter().map(|v| sig17(*v)));
            cells.extend(r.srank.iter().map(|v| sig17(*v)));
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
