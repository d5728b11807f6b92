use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use joma_dynamics::nonlinear::monte_carlo_delta;
use joma_dynamics::{AttentionKind, MixtureSpec, Psi};
use joma_hblt::{sample, HbltSpec, LatentTree};
use joma_num::{Exec, RadialDensity, RngSeed};
use joma_transformer::grad::loss_and_grads;
use joma_transformer::{Activation, Example, LossPositions, ModelDims, ModelParams, Objective, Optimizer, TrainConfig, Window};

const MODES: [(&str, Exec); 2] = [("serial", Exec::Serial), ("parallel", Exec::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let mix = MixtureSpec {
        centers: vec![vec![0.6, 0.4, 0.1], vec![0.4, 0.6, 0.3]],
        coeffs: vec![1.0, -0.7],
        density: RadialDensity::StandardGaussian { dim: 3 },
        query: 0,
    };
    let mut g = c.benchmark_group("monte_carlo_delta_200k");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| monte_carlo_delta(&[0.3, -0.2, 0.5], 0.1, &mix, &Psi::Step, 200_000, RngSeed(1), exec).unwrap())
        });
    }
    g.finish();
}

fn corpus(c: &mut Criterion) {
    let tree = LatentTree::new(&HbltSpec::uniform(20, 0.98, vec![10, 20], 2, 100, 30)).unwrap();
    let mut g = c.benchmark_group("hblt_sample_20k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample(&tree, 20_000, RngSeed(2), exec).unwrap())
        });
    }
    g.finish();
}

fn gradients(c: &mut Criterion) {
    let cfg = TrainConfig {
        dims: ModelDims {
            vocab: 100,
            d: 200,
            hidden: 64,
            classes: 20,
            layers: 3,
        },
        objective: Objective::CrossEntropy,
        optimizer: Optimizer::adam(),
        lr: 3e-3,
        steps: 1,
        batch: 32,
        seed: 0,
        activation: Activation::Relu,
        attention: AttentionKind::Softmax,
        window: Window::Causal,
        loss_at: LossPositions::All,
        stride: 1,
        init_scale: 1.0,
    };
    let params = ModelParams::init(cfg.dims, cfg.attention, 1.0, RngSeed(3)).unwrap();
    let tree = LatentTree::new(&HbltSpec::uniform(20, 0.98, vec![10, 20], 2, 100, 30)).unwrap();
    let batch: Vec<Example> = sample(&tree, 32, RngSeed(4), Exec::Serial)
        .unwrap()
        .iter()
        .map(Example::from)
        .collect();
    let mut g = c.benchmark_group("loss_and_grads_batch32");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| loss_and_grads(&params, &batch, &cfg, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, monte_carlo, corpus, gradients);
criterion_main!(benches);
