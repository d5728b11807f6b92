use joma_dynamics::coupled::{run_coupled, CoupledState, GradStats};
use joma_dynamics::nonlinear::{
    delta_nonlinear, monte_carlo_delta, theta1, theta2, F_of_r, MixtureSpec, Psi,
};
use joma_dynamics::AttentionKind;
use joma_num::{erf, Exec, RadialDensity, RngSeed};
use std::f64::consts::PI;

fn phi(r: f64) -> f64 {
    (-0.5 * r * r).exp() / (2.0 * PI).sqrt()
}

fn cdf(r: f64) -> f64 {
    0.5 * (1.0 + erf(r / 2f64.sqrt()))
}

#[test]
fn gaussian_step_thetas_match_closed_forms() {
    let p = RadialDensity::StandardGaussian { dim: 5 };
    assert!((theta1(0.0, &Psi::Step, &p).unwrap() - 0.5).abs() <= 1e-6);
    assert!((theta2(0.0, &Psi::Step, &p).unwrap() - 0.398_942).abs() <= 1e-6);
    for i in -40..=40 {
        let r = i as f64 * 0.1;
        assert!((theta1(r, &Psi::Step, &p).unwrap() - cdf(r)).abs() < 1e-10, "r={r}");
        assert!((theta2(r, &Psi::Step, &p).unwrap() - phi(r)).abs() < 1e-10, "r={r}");
    }
    assert!(theta1(-10.0, &Psi::Step, &p).unwrap() <= 1e-6);
    assert!(theta1(10.0, &Psi::Step, &p).unwrap() >= 1.0 - 1e-6);
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn ball_thetas_match_closed_form_marginal() {
    // Marginal of the unit 3-ball is (3/4)(1 - y²).
    let p = RadialDensity::UniformBall { radius: 1.0, dim: 3 };
    let m = |y: f64| 0.75 * (1.0 - y * y);
    for r in [-0.8, -0.3, 0.0, 0.4, 0.9] {
        let lo = -r;
        let t1 = simpson(m, lo, 1.0, 2000);
        let t2 = simpson(|y| y * m(y), lo, 1.0, 2000);
        assert!((theta1(r, &Psi::Step, &p).unwrap() - t1).abs() < 1e-10);
        assert!((theta2(r, &Psi::Step, &p).unwrap() - t2).abs() < 1e-10);
    }
}

#[test]
fn theta1_monotone_in_unit_interval() {
    let p = RadialDensity::UniformBall { radius: 2.0, dim: 4 };
    let mut prev = 0.0;
    for i in -30..=30 {
        let t = theta1(i as f64 * 0.1, &Psi::Step, &p).unwrap();
        assert!((0.0..=1.0 + 1e-12).contains(&t) && t >= prev - 1e-12);
        prev = t;
    }
}

#[test]
fn orthogonal_single_component_plug_in() {
    let p = RadialDensity::StandardGaussian { dim: 2 };
    let xbar = vec![0.8, 0.0];
    let v = vec![0.0, 2.0];
    let a = 0.7;
    let mix = MixtureSpec { centers: vec![xbar.clone()], coeffs: vec![a], density: p, query: 0 };
    let d = delta_nonlinear(&v, 0.0, &mix, &Psi::Step).unwrap();
    // Homogeneous ψ: θ̃₁/‖v‖ = θ₁(0) = ½ and θ̃₂/‖v‖³ · v = θ₂(0) v̂.
    let want = [a * 0.5 * xbar[0], a / (2.0 * PI).sqrt()];
    assert!((d[0] - want[0]).abs() < 1e-10 && (d[1] - want[1]).abs() < 1e-10, "{d:?}");
}

#[test]
fn delta_matches_monte_carlo_small() {
    let mix = MixtureSpec {
        centers: vec![vec![0.1, 0.5, 0.2, 0.2], vec![0.4, 0.1, 0.3, 0.2]],
        coeffs: vec![0.8, -0.5],
        density: RadialDensity::UniformBall { radius: 1.5, dim: 4 },
        query: 0,
    };
    let v = [0.6, -0.2, 1.1, 0.3];
    let xi = -0.25;
    let d = delta_nonlinear(&v, xi, &mix, &Psi::Step).unwrap();
    let mc = monte_carlo_delta(&v, xi, &mix, &Psi::Step, 200_000, RngSeed(9), Exec::Parallel).unwrap();
    for l in 0..4 {
        assert!((d[l] - mc.mean[l]).abs() <= 3.0 * mc.std_err[l], "l={l}: {} vs {} ± {}", d[l], mc.mean[l], mc.std_err[l]);
    }
    let serial = monte_carlo_delta(&v, xi, &mix, &Psi::Step, 200_000, RngSeed(9), Exec::Serial).unwrap();
    assert_eq!(serial, mc);
}

#[test]
fn f_derivative_is_theta1() {
    let p = RadialDensity::StandardGaussian { dim: 3 };
    assert!((F_of_r(0.0, &Psi::Step, &p).unwrap() - 0.398_942).abs() < 1e-6);
    let h = 1e-3;
    let mut prev = f64::NEG_INFINITY;
    for i in -10..=10 {
        let r = i as f64 * 0.5;
        let f = F_of_r(r, &Psi::Step, &p).unwrap();
        assert!(f > prev);
        prev = f;
        let fd = (F_of_r(r + h, &Psi::Step, &p).unwrap() - F_of_r(r - h, &Psi::Step, &p).unwrap()) / (2.0 * h);
        assert!((fd - theta1(r, &Psi::Step, &p).unwrap()).abs() <= 1e-4, "r={r}");
    }
}

#[test]
fn exp_invariant_residual_is_first_order() {
    let stats = GradStats::new(
        vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.2, 0.7]],
        vec![vec![0.4, -0.3], vec![-0.2, 0.5]],
        vec![0.5, 0.5],
    )
    .unwrap();
    let kind = AttentionKind::Exp { normalizer: 1.0 };
    let coarse = run_coupled(CoupledState::zeros(3, 2), &stats, kind, 1e-3, 2000, 500).unwrap();
    let fine = run_coupled(CoupledState::zeros(3, 2), &stats, kind, 1e-4, 20_000, 5000).unwrap();
    let ratio = coarse.terminal_residual(kind) / fine.terminal_residual(kind);
    assert!((5.0..=20.0).contains(&ratio), "ratio {ratio}");
    assert_eq!(coarse.trajectory.rows()[0].last(), Some(&0.0));
}
