use joma_dynamics::AttentionKind;
use joma_num::{mean_abs_cossim, Matrix, RngSeed};
use joma_transformer::checkpoint::{read_params, write_params};
use joma_transformer::{
    attention_entropy_at, forward, ncorr, permutation_null, Activation, Arch, Example, ModelDims, ModelParams, Window,
};
use rand::Rng;

fn dims(layers: usize) -> ModelDims {
    ModelDims {
        vocab: 6,
        d: 14,
        hidden: 5,
        classes: 3,
        layers,
    }
}

fn perturbed(layers: usize, kind: AttentionKind, seed: u64) -> ModelParams {
    let mut p = ModelParams::init(dims(layers), kind, 1.0, RngSeed(seed)).unwrap();
    let mut rng = RngSeed(seed ^ 0xff).rng();
    for l in &mut p.train.layers {
        for z in l.z.as_mut_slice() {
            *z += rng.random_range(-1.5..1.5);
        }
    }
    p
}

fn arch(activation: Activation) -> Arch {
    Arch {
        activation,
        attention: AttentionKind::Softmax,
        window: Window::Causal,
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Straight-line re-implementation. Layer 0 uses the frequency-vector
/// form `b = σ(z_q) ∘ x / A` over the vocabulary.
fn reference(p: &ModelParams, toks: &[usize], act: Activation, kind: AttentionKind, window: Window) -> Vec<Vec<f64>> {
    let (m, d, k) = (p.dims.vocab, p.dims.d, p.dims.hidden);
    let phi = |x: f64| if act == Activation::Relu { x.max(0.0) } else { x };
    let mut outs: Vec<Vec<f64>> = Vec::new();
    for (s, layer) in p.train.layers.iter().enumerate() {
        let mut next = Vec::new();
        for t in 0..toks.len() {
            let zq = layer.z.row(toks[t]);
            let end = if window == Window::Full { toks.len() } else { t + 1 };
            let mut f = vec![0.0; d];
            if s == 0 {
                let mut x = vec![0.0; m];
                for &l in &toks[..end] {
                    x[l] += 1.0 / end as f64;
                }
                let sigma: Vec<f64> = match kind {
                    AttentionKind::Linear => zq.to_vec(),
                    _ => zq.iter().map(|z| z.exp()).collect(),
                };
                let a = match kind {
                    AttentionKind::Linear => 1.0,
                    AttentionKind::Exp { normalizer } => normalizer,
                    AttentionKind::Softmax => (0..m).map(|l| sigma[l] * x[l]).sum(),
                };
                for l in 0..m {
                    let b = sigma[l] * x[l] / a;
                    for i in 0..d {
                        f[i] += b * p.emb_c.get(l, i);
                    }
                }
                for i in 0..d {
                    f[i] += p.emb_q.get(toks[t], i);
                }
            } else {
                let prev = &outs;
                let raw: Vec<f64> = (0..end)
                    .map(|tp| match kind {
                        AttentionKind::Linear => zq[toks[tp]],
                        _ => zq[toks[tp]].exp(),
                    })
                    .collect();
                let norm = match kind {
                    AttentionKind::Softmax => raw.iter().sum::<f64>(),
                    AttentionKind::Exp { normalizer } => normalizer * end as f64,
                    AttentionKind::Linear => end as f64,
                };
                for tp in 0..end {
                    for i in 0..d {
                        f[i] += raw[tp] / norm * prev[tp][i];
                    }
                }
                for i in 0..d {
                    f[i] += prev[t][i];
                }
            }
            let mut o = f.clone();
            for kk in 0..k {
                let h = phi(dotv(layer.lower.row(kk), &f));
                for i in 0..d {
                    o[i] += h * layer.upper.get(kk, i);
                }
            }
            next.push(o);
        }
        outs = next;
    }
    outs.iter()
        .map(|o| (0..p.dims.classes).map(|c| dotv(p.train.classifier.row(c), o)).collect())
        .collect()
}

#[test]
fn forward_matches_reference() {
    let kinds = [AttentionKind::Softmax, AttentionKind::Exp { normalizer: 1.5 }, AttentionKind::Linear];
    let mut rng = RngSeed(4).rng();
    for (i, kind) in kinds.into_iter().enumerate() {
        for layers in 1..=3 {
            for (act, window) in [
                (Activation::Relu, Window::Causal),
                (Activation::Linear, Window::Causal),
                (Activation::Relu, Window::Full),
            ] {
                let p = perturbed(layers, kind, 20 + i as u64 * 3 + layers as u64);
                let toks: Vec<usize> = (0..7).map(|_| rng.random_range(0..6)).collect();
                let arch = Arch { activation: act, attention: kind, window };
                let tr = forward(&p, &Example { tokens: toks.clone(), class: 0 }, arch).unwrap();
                let want = reference(&p, &toks, act, kind, window);
                for (t, row) in want.iter().enumerate() {
                    for (c, w) in row.iter().enumerate() {
                        let got = tr.logits[t * 3 + c];
                        assert!((got - w).abs() <= 1e-12 * w.abs().max(1.0), "{kind:?} L={layers}: {got} vs {w}");
                    }
                }
            }
        }
    }
}

#[test]
fn zero_lower_weights_give_zero_hidden() {
    let mut p = perturbed(2, AttentionKind::Softmax, 1);
    for l in &mut p.train.layers {
        l.lower = Matrix::zeros(5, 14);
    }
    let tr = forward(&p, &Example { tokens: vec![1, 2, 2], class: 0 }, arch(Activation::Linear)).unwrap();
    for lt in &tr.layers {
        assert!(lt.h.iter().all(|h| *h == 0.0));
        assert_eq!(lt.f, lt.o);
    }
}

#[test]
fn single_token_input() {
    let p = ModelParams::init(dims(1), AttentionKind::Softmax, 1.0, RngSeed(2)).unwrap();
    let l = 4;
    let tr = forward(&p, &Example { tokens: vec![l], class: 0 }, arch(Activation::Relu)).unwrap();
    for k in 0..5 {
        let f: Vec<f64> = p.emb_c.row(l).iter().zip(p.emb_q.row(l)).map(|(a, b)| a + b).collect();
        let want = dotv(p.train.layers[0].lower.row(k), &f).max(0.0);
        assert!((tr.layers[0].h[k] - want).abs() < 1e-14);
    }
}

#[test]
fn embeddings_orthonormal() {
    let p = ModelParams::init(dims(2), AttentionKind::Softmax, 1.0, RngSeed(8)).unwrap();
    assert!(p.embedding_orthogonality_error() <= 1e-10);
    let mut cols = Vec::new();
    for l in 0..6 {
        cols.push(p.emb_c.row(l).to_vec());
        cols.push(p.emb_q.row(l).to_vec());
    }
    assert!(mean_abs_cossim(&Matrix::from_columns(&cols).unwrap()).unwrap() <= 1e-10);
    let bad = ModelDims { d: 11, ..dims(1) };
    assert!(ModelParams::init(bad, AttentionKind::Softmax, 1.0, RngSeed(8)).is_err());
}

#[test]
fn entropy_examples() {
    let mut p = ModelParams::init(dims(1), AttentionKind::Softmax, 1.0, RngSeed(8)).unwrap();
    let ex = Example { tokens: vec![0, 1, 2, 3, 4, 5], class: 0 };
    let h = attention_entropy_at(&p, &ex, 0, 5, AttentionKind::Softmax, Window::Causal).unwrap();
    assert!((h - 6f64.ln()).abs() < 1e-12);
    p.train.layers[0].z.row_mut(5)[2] = 30.0;
    let h = attention_entropy_at(&p, &ex, 0, 5, AttentionKind::Softmax, Window::Causal).unwrap();
    assert!(h <= 1e-8, "{h}");
    // Full window at position 0 still sees every token.
    let h = attention_entropy_at(&p, &ex, 0, 0, AttentionKind::Softmax, Window::Full).unwrap();
    assert!((h - 6f64.ln()).abs() < 1e-12);
}

#[test]
fn checkpoint_roundtrip() {
    let p = perturbed(3, AttentionKind::Softmax, 6);
    let mut buf = Vec::new();
    write_params(&mut buf, &p).unwrap();
    assert_eq!(&buf[..8], b"JOMAMAT1");
    assert_eq!(read_params(&buf[..]).unwrap(), p);
    buf[0] = b'X';
    assert!(read_params(&buf[..]).is_err());
}

#[test]
fn ncorr_examples() {
    let mut rng = RngSeed(12).rng();
    let n = 2000;
    let latents: Vec<Vec<bool>> = (0..n).map(|_| (0..8).map(|_| rng.random::<f64>() < 0.3).collect()).collect();
    let acts = Matrix::from_fn(n, 16, |i, k| {
        if k < 8 {
            if latents[i][k] { 1.0 } else { 0.0 }
        } else {
            rng.random::<f64>()
        }
    })
    .unwrap();
    let r = ncorr(&acts, &latents).unwrap();
    assert!(r.ncorr.iter().all(|c| (c - 1.0).abs() < 1e-12));
    assert_eq!(r.best_neuron, (0..8).collect::<Vec<_>>());
    let null = permutation_null(&acts, &latents, RngSeed(1)).unwrap();
    assert!(null.mean() <= 0.2, "{}", null.mean());
    // A constant neuron never wins.
    let flat = Matrix::from_fn(n, 1, |_, _| 2.0).unwrap();
    assert_eq!(ncorr(&flat, &latents).unwrap().ncorr, vec![0.0; 8]);
}
