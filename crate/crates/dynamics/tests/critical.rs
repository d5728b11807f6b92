use joma_dynamics::critical::{newton_polish, two_component_candidates};
use joma_dynamics::nonlinear::{critical_residual, delta_and_xi_rate, F_of_r, theta1, MixtureSpec, Psi};
use joma_num::density::Tabulated;
use joma_num::RadialDensity;
use std::f64::consts::PI;

/// Isotropic 2-D scale mixture 0.9 N(0, 0.1²) + 0.1 N(0, 3²).
fn scale_mixture() -> RadialDensity {
    let n = 1200;
    let radii: Vec<f64> = (0..=n).map(|i| 15.0 * (i as f64 / n as f64).powi(2)).collect();
    let comp = |w: f64, s: f64, r: f64| w / (2.0 * PI * s * s) * (-0.5 * r * r / (s * s)).exp();
    let t = Tabulated::from_fn(2, radii, |r| comp(0.9, 0.1, r) + comp(0.1, 3.0, r)).unwrap();
    RadialDensity::Custom(t)
}

#[test]
fn gaussian_has_no_two_component_stationary_point() {
    let mix = MixtureSpec {
        centers: vec![vec![0.6, 0.4], vec![0.3, 0.7]],
        coeffs: vec![1.0, -1.0],
        density: RadialDensity::StandardGaussian { dim: 2 },
        query: 0,
    };
    let pts = two_component_candidates(&mix, &Psi::Step, 4.0, 0.02).unwrap();
    assert!(pts.is_empty(), "{pts:?}");
}

#[test]
fn heavy_tailed_mixture_has_stationary_points_with_zero_residual() {
    let mix = MixtureSpec {
        centers: vec![vec![0.6, 0.4], vec![0.4, 0.6]],
        coeffs: vec![1.0, -1.0],
        density: scale_mixture(),
        query: 0,
    };
    let psi = Psi::Step;
    let pts = two_component_candidates(&mix, &psi, 3.0, 0.01).unwrap();
    assert!(!pts.is_empty());
    for p in &pts {
        // Start Newton away from the constructed point.
        let v0: Vec<f64> = p.v.iter().enumerate().map(|(i, x)| x + 0.01 * (i as f64 + 1.0)).collect();
        let found = newton_polish(&v0, p.xi + 0.01, p.coeffs[1] * 1.01, &mix, &psi).unwrap();
        let mut m = mix.clone();
        m.coeffs = found.coeffs.clone();
        let (d, xr) = delta_and_xi_rate(&found.v, found.xi, &m, &psi).unwrap();
        let field = d.iter().chain([&xr]).fold(0.0f64, |a, b| a.max(b.abs()));
        let res = critical_residual(&found.v, found.xi, &m, &psi).unwrap();
        assert!(field < 1e-9);
        assert!(res.abs() <= 1e-4);
    }
}

#[test]
fn f_is_theta2_plus_r_theta1() {
    let p = RadialDensity::StandardGaussian { dim: 1 };
    for r in [-2.0, -0.5, 0.0, 0.7, 1.5] {
        let f = F_of_r(r, &Psi::Step, &p).unwrap();
        let want = (-0.5 * r * r).exp() / (2.0 * PI).sqrt() + r * theta1(r, &Psi::Step, &p).unwrap();
        assert!((f - want).abs() < 1e-9, "r={r}");
    }
}
