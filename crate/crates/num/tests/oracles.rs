use joma_num::density::Tabulated;
use joma_num::{
    erf, erf_inv, g_func, integrate, mean_abs_cossim, stable_rank, Domain, G_func, Matrix,
    QuadratureSpec, RadialDensity, RngSeed,
};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

fn tight() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-14,
        ..QuadratureSpec::default()
    }
}

#[test]
fn erf_matches_defining_integral() {
    let spec = tight();
    for i in -60..=60 {
        let x = i as f64 * 0.1;
        let q = 2.0 / PI.sqrt() * integrate(|t| (-t * t).exp(), Domain::Interval(0.0, x), &spec).unwrap();
        assert!((erf(x) - q).abs() <= 1e-12, "x={x}: {} vs {q}", erf(x));
    }
    assert!((erf(1.0) - 0.842_700_792_9).abs() <= 1e-9);
}

#[test]
fn erf_odd_increasing_bounded() {
    let mut prev = -1.0;
    for i in -8000..=8000 {
        let x = i as f64 * 1e-3;
        let e = erf(x);
        assert_eq!(e, -erf(-x));
        assert!(e >= prev - 1e-12 && e.abs() <= 1.0 + 1e-12);
        prev = e;
    }
}

fn bisect_erf(y: f64) -> f64 {
    let (mut lo, mut hi) = (-6.0, 6.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if erf(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn erf_inv_against_bisection() {
    let v = erf_inv(0.5).unwrap();
    assert!((v - 0.476_936_276_2).abs() <= 1e-8);
    assert!((v - bisect_erf(0.5)).abs() <= 1e-12);
    assert!((erf(erf_inv(erf(0.7)).unwrap()) - erf(0.7)).abs() <= 1e-10);
    for y in [-0.999, -0.9, -0.3, 0.01, 0.6, 0.99, 0.999_999] {
        assert!((erf_inv(y).unwrap() - bisect_erf(y)).abs() <= 1e-9, "y={y}");
    }
}

#[test]
fn ten_known_integrals() {
    let s = QuadratureSpec::default();
    let gauss = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    let cases: Vec<(f64, f64)> = vec![
        (integrate(gauss, Domain::FullLine, &s).unwrap(), 1.0),
        (integrate(|y| y * gauss(y), Domain::Above(0.0), &s).unwrap(), 1.0 / (2.0 * PI).sqrt()),
        (integrate(|x| x * x, Domain::Interval(0.0, 1.0), &s).unwrap(), 1.0 / 3.0),
        (integrate(|x| x.sin(), Domain::Interval(0.0, PI), &s).unwrap(), 2.0),
        (integrate(|x| 1.0 / (1.0 + x * x), Domain::Interval(-1.0, 1.0), &s).unwrap(), PI / 2.0),
        (integrate(|x| x.ln(), Domain::Interval(1.0, 2.0), &s).unwrap(), 2.0 * 2f64.ln() - 1.0),
        (integrate(|x| x * x * gauss(x), Domain::FullLine, &s).unwrap(), 1.0),
        (integrate(|x| x.abs(), Domain::Interval(-1.0, 2.0), &s).unwrap(), 2.5),
        (integrate(|x| x.sqrt(), Domain::Interval(0.0, 1.0), &s).unwrap(), 2.0 / 3.0),
        (integrate(gauss, Domain::Below(0.0), &s).unwrap(), 0.5),
    ];
    for (i, (got, want)) in cases.iter().enumerate() {
        let tol = s.abs_tol.max(s.rel_tol * want.abs()) * 10.0;
        assert!((got - want).abs() <= tol, "case {i}: {got} vs {want}");
    }
}

#[test]
fn g_and_big_g_bounds_on_grid() {
    let bound = 1.0 / 2f64.sqrt();
    for i in 0..=10_000 {
        let y = i as f64 * 1e-3;
        let g = g_func(y).unwrap();
        let big = G_func(y).unwrap();
        assert!(g <= bound, "g({y}) = {g}");
        assert!((0.0..=1.0).contains(&big), "G({y}) = {big}");
    }
}

#[test]
fn big_g_solves_its_ode() {
    // G' = 1 - y G with G(0) = 0, integrated by RK4.
    let h = 1e-4;
    let f = |y: f64, g: f64| 1.0 - y * g;
    let (mut y, mut g) = (0.0f64, 0.0f64);
    for step in 1..=100_000 {
        let k1 = f(y, g);
        let k2 = f(y + h / 2.0, g + h / 2.0 * k1);
        let k3 = f(y + h / 2.0, g + h / 2.0 * k2);
        let k4 = f(y + h, g + h * k3);
        g += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        y = step as f64 * h;
        if step % 5000 == 0 {
            assert!((G_func(y).unwrap() - g).abs() < 1e-10, "y={y}");
        }
    }
}

#[test]
fn stable_rank_examples() {
    assert!((stable_rank(&Matrix::identity(5)).unwrap() - 5.0).abs() < 1e-12);
    let u = [1.0, -2.0, 0.5];
    let v = [3.0, 1.0];
    let outer = Matrix::from_fn(3, 2, |r, c| u[r] * v[c]).unwrap();
    assert!((stable_rank(&outer).unwrap() - 1.0).abs() < 1e-9);
    let d = Matrix::new(2, 2, vec![2.0, 0.0, 0.0, 1.0]).unwrap();
    assert!((stable_rank(&d).unwrap() - 1.25).abs() < 1e-9);
}

#[test]
fn cossim_examples() {
    let q = Matrix::identity(4);
    assert!(mean_abs_cossim(&q).unwrap().abs() < 1e-12);
    let dup = Matrix::new(2, 2, vec![1.0, 1.0, 2.0, 2.0]).unwrap();
    assert!((mean_abs_cossim(&dup).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn cossim_random_matches_monte_carlo() {
    let (d, n) = (64, 256);
    let mut rng = RngSeed(11).rng();
    let w = Matrix::from_fn(d, n, |_, _| rng.sample(StandardNormal)).unwrap();
    let got = mean_abs_cossim(&w).unwrap();

    // Independent pairs of fresh Gaussian vectors.
    let mut rng = RngSeed(12).rng();
    let trials = 50_000;
    let mut vals = Vec::with_capacity(trials);
    for _ in 0..trials {
        let a: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        vals.push((dot / (na * nb)).abs());
    }
    let mean = vals.iter().sum::<f64>() / trials as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let pairs = (n * (n - 1) / 2) as f64;
    let sigma = (var / pairs + var / trials as f64).sqrt();
    assert!((got - mean).abs() <= 3.0 * sigma, "{got} vs {mean} ± {sigma}");

    let closed = (ln_gamma(d as f64 / 2.0) - ln_gamma((d as f64 + 1.0) / 2.0)).exp() / PI.sqrt();
    assert!((mean - closed).abs() <= 3.0 * (var / trials as f64).sqrt());
}

#[test]
fn gaussian_marginal_is_normalised() {
    let p = RadialDensity::StandardGaussian { dim: 7 };
    let s = QuadratureSpec::default();
    let mass = integrate(|y| p.marginal(y), Domain::FullLine, &s).unwrap();
    assert!((mass - 1.0).abs() < 1e-10);
}

#[test]
fn ball_marginal_matches_closed_form() {
    for dim in 1..=6 {
        let radius = 1.7;
        let p = RadialDensity::UniformBall { radius, dim };
        let n = dim as f64;
        // Beta-type normalisation of (R^2 - y^2)^((n-1)/2).
        let norm = (ln_gamma(n / 2.0 + 1.0) - ln_gamma((n + 1.0) / 2.0)).exp() / (PI.sqrt() * radius.powf(n));
        for i in 0..40 {
            let y = -1.8 + i as f64 * 0.09;
            let want = if y.abs() < radius {
                norm * (radius * radius - y * y).powf((n - 1.0) / 2.0)
            } else {
                0.0
            };
            assert!((p.marginal(y) - want).abs() < 1e-10, "dim={dim} y={y}");
        }
    }
}

#[test]
fn tabulated_gaussian_recovers_normal_marginal() {
    let dim = 3;
    let radii: Vec<f64> = (0..=1500).map(|i| i as f64 * 0.01).collect();
    let c = (2.0 * PI).powf(-1.5);
    let t = Tabulated::from_fn(dim, radii, |r| c * (-0.5 * r * r).exp()).unwrap();
    let p = RadialDensity::Custom(t);
    for y in [0.0f64, 0.5, 1.0, 2.0, 3.0] {
        let want = (-0.5 * y * y).exp() / (2.0 * PI).sqrt();
        assert!((p.marginal(y) - want).abs() < 1e-4, "y={y}: {}", p.marginal(y));
    }
}

#[test]
fn samples_have_expected_second_moment() {
    // E[y_1^2] = E[r^2] / n.
    let cases = [
        (RadialDensity::StandardGaussian { dim: 4 }, 1.0),
        (RadialDensity::UniformBall { radius: 2.0, dim: 4 }, 4.0 / 6.0),
    ];
    for (p, want) in cases {
        let mut rng = RngSeed(3).rng();
        let n = 200_000;
        let m: f64 = (0..n).map(|_| p.sample(&mut rng)[0].powi(2)).sum::<f64>() / n as f64;
        assert!((m - want).abs() < 0.02 * want, "{m} vs {want}");
    }
}

#[test]
fn tabulated_cumulative_matches_quadrature() {
    let radii: Vec<f64> = (0..=400).map(|i| 6.0 * (i as f64 / 400.0).powi(2)).collect();
    let t = Tabulated::from_fn(2, radii, |r| (-r).exp()).unwrap();
    let p = RadialDensity::Custom(t.clone());
    let knots = p.marginal_knots();
    let s = QuadratureSpec::default();
    for x in [-7.0, -2.0, -0.3, 0.0, 0.01, 1.5, 6.0, 9.0] {
        let mut pts: Vec<f64> = knots.iter().copied().filter(|k| *k < x).collect();
        if pts.is_empty() {
            assert_eq!(t.marginal_cumulative(x), (0.0, 0.0));
            continue;
        }
        pts.push(x.min(6.0));
        let m0 = joma_num::integrate_pieces(|y| p.marginal(y), &pts, &s).unwrap();
        let m1 = joma_num::integrate_pieces(|y| y * p.marginal(y), &pts, &s).unwrap();
        let (c0, c1) = t.marginal_cumulative(x);
        assert!((c0 - m0).abs() < 1e-12 && (c1 - m1).abs() < 1e-12, "x={x}");
    }
    assert!((t.marginal_cumulative(f64::INFINITY).0 - 1.0).abs() < 1e-4);
}
