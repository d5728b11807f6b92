use joma_dynamics::coupled::{run_coupled, CoupledState, GradStats};
use joma_dynamics::reduced::{
    attention_entropy_of, erf_invariant_residual, linear_field, nonlinear_field, run_reduced, Integrator,
    ReducedState, RunSpec, StepGuard,
};
use joma_dynamics::{attention_reweight, AttentionKind};
use proptest::prelude::*;

fn no_extra(_: &ReducedState) -> Vec<f64> {
    Vec::new()
}

fn delta_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![-2.0..-0.1f64, 0.1..2.0f64], 2..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn erf_ratios_are_conserved(delta in delta_strategy()) {
        let spec = RunSpec {
            eta: 1e-3,
            t_end: 0.3,
            snapshot_dt: 0.1,
            integrator: Integrator::Rk4,
            guard: StepGuard { cap: 30.0, max_increment: 0.01 },
        };
        let run = run_reduced(ReducedState::new(vec![0.0; delta.len()]), linear_field(&delta), &spec, &no_extra, &[]).unwrap();
        let res = erf_invariant_residual(&run.last, &delta).unwrap();
        prop_assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn linear_flow_keeps_argmax(delta in delta_strategy()) {
        let spec = RunSpec {
            eta: 1e-3,
            t_end: 0.4,
            snapshot_dt: 0.1,
            integrator: Integrator::Rk4,
            guard: StepGuard { cap: 30.0, max_increment: 0.01 },
        };
        let run = run_reduced(ReducedState::new(vec![0.0; delta.len()]), linear_field(&delta), &spec, &no_extra, &[]).unwrap();
        let argmax = |v: &[f64]| (0..v.len()).max_by(|a, b| v[*a].total_cmp(&v[*b])).unwrap();
        prop_assert_eq!(argmax(&run.last.v), argmax(&delta));
    }

    #[test]
    fn larger_target_converges_first(lo in 0.5..1.5f64, gap in 0.2..1.0f64) {
        let mu = vec![lo + gap, lo];
        let spec = RunSpec {
            eta: 2e-3,
            t_end: 1.0,
            snapshot_dt: 0.5,
            integrator: Integrator::Rk4,
            guard: StepGuard::default(),
        };
        let init = ReducedState::new(mu.iter().map(|m| 0.01 * m).collect());
        let run = run_reduced(init, nonlinear_field(&mu, true), &spec, &no_extra, &[]).unwrap();
        let d: Vec<f64> = run.last.v.iter().zip(&mu).map(|(v, m)| 1.0 - v / m).collect();
        prop_assert!(d[0] < d[1], "deficits {d:?}");
    }

    #[test]
    fn softmax_reweight_is_distribution(
        z in prop::collection::vec(-50.0..50.0f64, 1..12),
        shift in -100.0..100.0f64,
    ) {
        let x: Vec<f64> = (0..z.len()).map(|i| 1.0 + i as f64).collect();
        let b = attention_reweight(&z, &x, AttentionKind::Softmax).unwrap();
        prop_assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(b.iter().all(|v| *v >= 0.0));
        let zs: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let bs = attention_reweight(&zs, &x, AttentionKind::Softmax).unwrap();
        for (p, q) in b.iter().zip(&bs) {
            prop_assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn attention_entropy_bounded(v in prop::collection::vec(-5.0..5.0f64, 1..10)) {
        let h = attention_entropy_of(&v);
        prop_assert!(h >= 0.0 && h <= (v.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn exact_coupled_invariants_hold(
        a in prop::collection::vec(-0.5..0.5f64, 4),
        x0 in 0.05..0.9f64,
        x1 in 0.05..0.9f64,
    ) {
        let stats = GradStats::new(
            vec![vec![x0, 1.0 - x0, 0.0], vec![0.0, x1, 1.0 - x1]],
            vec![a[..2].to_vec(), a[2..].to_vec()],
            vec![0.5, 0.5],
        ).unwrap();
        for (kind, init) in [
            (AttentionKind::Exp { normalizer: 1.0 }, CoupledState::zeros(3, 2)),
            (AttentionKind::Linear, CoupledState::with_logits(vec![1.0; 3], 2)),
        ] {
            let run = run_coupled(init, &stats, kind, 1e-4, 10_000, 10_000).unwrap();
            prop_assert!(run.terminal_residual(kind) < 1e-3, "{kind:?}: {}", run.terminal_residual(kind));
        }
    }
}
