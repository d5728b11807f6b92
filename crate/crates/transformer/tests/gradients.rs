use joma_dynamics::AttentionKind;
use joma_num::{Exec, RngSeed};
use joma_transformer::grad::loss_and_grads;
use joma_transformer::{Activation, Example, LossPositions, ModelDims, ModelParams, Objective, Optimizer, TrainConfig, Window};
use rand::Rng;

fn config(layers: usize, act: Activation, attention: AttentionKind, objective: Objective) -> TrainConfig {
    TrainConfig {
        dims: ModelDims {
            vocab: 5,
            d: 12,
            hidden: 4,
            classes: 3,
            layers,
        },
        objective,
        optimizer: Optimizer::Sgd,
        lr: 0.1,
        steps: 1,
        batch: 4,
        seed: 1,
        activation: act,
        attention,
        window: Window::Causal,
        loss_at: LossPositions::All,
        stride: 1,
        init_scale: 1.0,
    }
}

fn random_model(cfg: &TrainConfig, seed: u64) -> ModelParams {
    let mut p = ModelParams::init(cfg.dims, cfg.attention, cfg.init_scale, RngSeed(seed)).unwrap();
    let mut rng = RngSeed(seed + 100).rng();
    for l in &mut p.train.layers {
        for z in l.z.as_mut_slice() {
            *z += rng.random_range(-1.0..1.0);
        }
    }
    p
}

fn batch(seed: u64) -> Vec<Example> {
    let mut rng = RngSeed(seed).rng();
    (0..5)
        .map(|i| Example {
            tokens: (0..3 + i).map(|_| rng.random_range(0..5)).collect(),
            class: i % 3,
        })
        .collect()
}

/// Largest relative error between analytic and central-difference
/// gradients, with relative error `|a − n| / max(|a|, |n|, 1e-6)`.
fn gradcheck(cfg: &TrainConfig, seed: u64) -> f64 {
    let mut p = random_model(cfg, seed);
    let b = batch(seed);
    let (_, g) = loss_and_grads(&p, &b, cfg, Exec::Serial).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let n_tensors = g.tensors().len();
    for ti in 0..n_tensors {
        let len = g.tensors()[ti].as_slice().len();
        for i in 0..len {
            let orig = p.train.tensors()[ti].as_slice()[i];
            p.train.tensors_mut()[ti].as_mut_slice()[i] = orig + h;
            let up = loss_and_grads(&p, &b, cfg, Exec::Serial).unwrap().0;
            p.train.tensors_mut()[ti].as_mut_slice()[i] = orig - h;
            let down = loss_and_grads(&p, &b, cfg, Exec::Serial).unwrap().0;
            p.train.tensors_mut()[ti].as_mut_slice()[i] = orig;
            let num = (up - down) / (2.0 * h);
            let ana = g.tensors()[ti].as_slice()[i];
            let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn gradcheck_all_tensors() {
    let kinds = [AttentionKind::Softmax, AttentionKind::Exp { normalizer: 2.0 }, AttentionKind::Linear];
    for (i, kind) in kinds.into_iter().enumerate() {
        for (layers, act, obj) in [
            (1, Activation::Linear, Objective::NodePayoff),
            (2, Activation::Relu, Objective::CrossEntropy),
            (3, Activation::Relu, Objective::CrossEntropy),
        ] {
            for window in [Window::Causal, Window::Full] {
                let cfg = TrainConfig {
                    window,
                    ..config(layers, act, kind, obj)
                };
                let err = gradcheck(&cfg, 7 + i as u64 * 10 + layers as u64);
                assert!(err <= 1e-4, "{kind:?} {window:?} layers={layers} {act:?}: relative error {err:e}");
            }
        }
    }
}

#[test]
fn symmetric_batch_is_stationary() {
    let cfg = config(2, Activation::Relu, AttentionKind::Softmax, Objective::NodePayoff);
    let p = random_model(&cfg, 3);
    let tokens = vec![0, 3, 1, 1];
    let b: Vec<Example> = (0..3).map(|class| Example { tokens: tokens.clone(), class }).collect();
    let (_, g) = loss_and_grads(&p, &b, &cfg, Exec::Serial).unwrap();
    assert!(g.max_abs() <= 1e-10, "{}", g.max_abs());
}

#[test]
fn payoff_step_moves_lower_weights_by_expected_gradient() {
    let mut cfg = config(1, Activation::Linear, AttentionKind::Softmax, Objective::NodePayoff);
    cfg.loss_at = LossPositions::Last;
    let p = random_model(&cfg, 5);
    let b = batch(9);
    let (_, g) = loss_and_grads(&p, &b, &cfg, Exec::Serial).unwrap();
    let mut next = p.train.clone();
    let mut opt = joma_transformer::optim::OptState::new(Optimizer::Sgd, &next);
    opt.update(&mut next, &g, cfg.lr);
    let d = cfg.dims.d;
    for k in 0..cfg.dims.hidden {
        // E[g_k f] over the batch's last positions.
        let mut want = vec![0.0; d];
        for ex in &b {
            let tr = joma_transformer::forward(&p, ex, cfg.arch()).unwrap();
            let t = ex.tokens.len() - 1;
            let gk = joma_transformer::grad::payoff_weight(k, ex.class, cfg.dims.classes);
            for (w, f) in want.iter_mut().zip(&tr.layers[0].f[t * d..(t + 1) * d]) {
                *w += cfg.lr * gk * f / b.len() as f64;
            }
        }
        let moved: Vec<f64> = next.layers[0].lower.row(k).iter().zip(p.train.layers[0].lower.row(k)).map(|(a, b)| a - b).collect();
        for (m, w) in moved.iter().zip(&want) {
            assert!((m - w).abs() <= 1e-14, "{m} vs {w}");
        }
    }
}

#[test]
fn serial_and_parallel_gradients_identical() {
    let cfg = config(3, Activation::Relu, AttentionKind::Softmax, Objective::CrossEntropy);
    let p = random_model(&cfg, 11);
    let mut b = batch(2);
    b.extend(batch(3));
    b.extend(batch(4));
    let (l1, g1) = loss_and_grads(&p, &b, &cfg, Exec::Serial).unwrap();
    let (l2, g2) = loss_and_grads(&p, &b, &cfg, Exec::Parallel).unwrap();
    assert_eq!(l1.to_bits(), l2.to_bits());
    assert_eq!(g1, g2);
}
