//! Nonlinear-activation dynamics for inputs drawn from a mixture of
//! isotropic distributions.

use crate::{DynError, Result};
use joma_num::matrix::{dot, norm};
use joma_num::quad::{integrate_pieces, QuadratureSpec};
use joma_num::{Exec, RadialDensity, RngSeed};

/// Activation derivative ψ = φ'.
#[derive(Debug, Clone, PartialEq)]
pub enum Psi {
    /// ReLU'
    Step,
    /// `neg` below zero, `pos` above.
    LeakyStep { neg: f64, pos: f64 },
    /// Piecewise-linear table, held constant beyond its ends.
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl Psi {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Psi::Step => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Psi::LeakyStep { neg, pos } => {
                if x > 0.0 {
                    *pos
                } else {
                    *neg
                }
            }
            Psi::Tabulated { xs, ys } => {
                let last = xs.len() - 1;
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[last] {
                    return ys[last];
                }
                let i = xs.partition_point(|&v| v <= x).clamp(1, last);
                let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                ys[i - 1] + t * (ys[i] - ys[i - 1])
            }
        }
    }

    /// Whether `φ(x) = ψ(x) x`, so the field depends on `(v, ξ)` only
    /// through their direction.
    pub fn is_homogeneous(&self) -> bool {
        !matches!(self, Psi::Tabulated { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if let Psi::Tabulated { xs, ys } = self {
            if xs.len() < 2 || xs.len() != ys.len() || xs.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(DynError::Invalid("tabulated psi needs increasing abscissae".into()));
            }
        }
        Ok(())
    }
}

/// Mixture of C isotropic distributions with centers `x̄_c` and
/// coefficients `a_c = E[g | c] P[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub centers: Vec<Vec<f64>>,
    pub coeffs: Vec<f64>,
    pub density: RadialDensity,
    pub query: usize,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let c = self.centers.len();
        if c == 0 || self.coeffs.len() != c {
            return Err(DynError::Dimension("need one coefficient per center".into()));
        }
        let m = self.centers[0].len();
        if m == 0 || self.centers.iter().any(|x| x.len() != m) {
            return Err(DynError::Dimension("centers must share one nonzero dimension".into()));
        }
        if self.centers.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(DynError::Invalid("centers must be finite and nonnegative".into()));
        }
        if self.coeffs.iter().all(|a| *a == 0.0) {
            return Err(DynError::Invalid("at least one coefficient must be nonzero".into()));
        }
        self.density.validate()?;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.centers[0].len()
    }
}

fn theta_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_subdivisions: 5000,
        ..QuadratureSpec::default()
    }
}

/// `E_s[ψ(scale·s + r)]` and `E_s[s ψ(scale·s + r)]` for `s` drawn from the
/// unit marginal of `p`.
fn moments(r: f64, scale: f64, psi: &Psi, p: &RadialDensity) -> Result<(f64, f64)> {
    if let RadialDensity::Custom(t) = p {
        // Piecewise-constant ψ against a piecewise-linear marginal is exact
        // from the cumulative tables.
        let split = |neg: f64, pos: f64| {
            let cut = t.marginal_cumulative(-r / scale);
            let all = t.marginal_cumulative(f64::INFINITY);
            (
                neg * cut.0 + pos * (all.0 - cut.0),
                neg * cut.1 + pos * (all.1 - cut.1),
            )
        };
        match psi {
            Psi::Step => return Ok(split(0.0, 1.0)),
            Psi::LeakyStep { neg, pos } => return Ok(split(*neg, *pos)),
            Psi::Tabulated { .. } => {}
        }
    }
    let spec = theta_spec();
    let half = p.support().unwrap_or(spec.r_max);
    let mut pts = vec![-half];
    // ψ jumps (or kinks) where its argument crosses zero.
    let kinks: Vec<f64> = match psi {
        Psi::Tabulated { xs, .. } => xs.clone(),
        _ => vec![0.0],
    };
    let mut inner: Vec<f64> = kinks
        .iter()
        .map(|k| (k - r) / scale)
        .chain(p.marginal_knots())
        .filter(|y| *y > -half && *y < half)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    pts.extend(inner);
    pts.push(half);
    let m0 = integrate_pieces(|y| psi.eval(scale * y + r) * p.marginal(y), &pts, &spec)?;
    let m1 = integrate_pieces(|y| y * psi.eval(scale * y + r) * p.marginal(y), &pts, &spec)?;
    Ok((m0, m1))
}

/// θ₁(r) = ∫ ψ(y + r) p_n(y) dy
pub fn theta1(r: f64, psi: &Psi, p: &RadialDensity) -> Result<f64> {
    Ok(moments(r, 1.0, psi, p)?.0)
}

/// θ₂(r) = ∫ y ψ(y + r) p_n(y) dy
pub fn theta2(r: f64, psi: &Psi, p: &RadialDensity) -> Result<f64> {
    Ok(moments(r, 1.0, psi, p)?.1)
}

/// Affinities `r_c = vᵀx̄_c + ξ`.
pub fn affinities(v: &[f64], xi: f64, mix: &MixtureSpec) -> Vec<f64> {
    mix.centers.iter().map(|x| dot(v, x) + xi).collect()
}

/// Expected weight update `E[x ψ(vᵀx + ξ)]` summed over the mixture with
/// weights `a_c`, together with the bias rate `E[ψ(vᵀx + ξ)]`.
///
/// Written as `θ̃₁(r_c) x̄_c / ‖v‖ + θ̃₂(r_c) v / ‖v‖³` with
/// `θ̃₁ = ‖v‖ E[ψ(‖v‖s + r)]` and `θ̃₂ = ‖v‖² E[s ψ(‖v‖s + r)]`, which
/// coincide with θ₁, θ₂ at `‖v‖ = 1`.
pub fn delta_and_xi_rate(v: &[f64], xi: f64, mix: &MixtureSpec, psi: &Psi) -> Result<(Vec<f64>, f64)> {
    if v.len() != mix.dim() {
        return Err(DynError::Dimension("v and centers differ in length".into()));
    }
    let nv = norm(v);
    if nv == 0.0 {
        return Err(DynError::ZeroV);
    }
    let mut delta = vec![0.0; v.len()];
    let mut xi_rate = 0.0;
    for ((x, a), r) in mix.centers.iter().zip(&mix.coeffs).zip(affinities(v, xi, mix)) {
        let (m0, m1) = moments(r, nv, psi, &mix.density)?;
        let t1 = nv * m0;
        let t2 = nv * nv * m1;
        for l in 0..v.len() {
            delta[l] += a * (t1 * x[l] / nv + t2 * v[l] / (nv * nv * nv));
        }
        xi_rate += a * m0;
    }
    Ok((delta, xi_rate))
}

pub fn delta_nonlinear(v: &[f64], xi: f64, mix: &MixtureSpec, psi: &Psi) -> Result<Vec<f64>> {
    Ok(delta_and_xi_rate(v, xi, mix, psi)?.0)
}

/// F(r) = θ₂(0) + ∫₀^r θ₁(r') dr'
#[allow(non_snake_case)]
pub fn F_of_r(r: f64, psi: &Psi, p: &RadialDensity) -> Result<f64> {
    let base = theta2(0.0, psi, p)?;
    if r == 0.0 {
        return Ok(base);
    }
    let spec = QuadratureSpec {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        ..QuadratureSpec::default()
    };
    let err = std::cell::Cell::new(None);
    let v = integrate_pieces(
        |s| match theta1(s, psi, p) {
            Ok(x) => x,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        },
        &[0.0, r],
        &spec,
    )?;
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(base + v),
    }
}

/// `Σ_c a_c F(r_c / ‖v‖)`; zero at every stationary point of the field
/// for homogeneous activations.
pub fn critical_residual(v: &[f64], xi: f64, mix: &MixtureSpec, psi: &Psi) -> Result<f64> {
    if !psi.is_homogeneous() {
        return Err(DynError::Invalid("critical residual needs a homogeneous activation".into()));
    }
    let nv = norm(v);
    if nv == 0.0 {
        return Err(DynError::ZeroV);
    }
    let mut total = 0.0;
    for (a, r) in mix.coeffs.iter().zip(affinities(v, xi, mix)) {
        total += a * F_of_r(r / nv, psi, &mix.density)?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    pub samples: usize,
}

/// Monte-Carlo estimate of `Σ_c a_c E[x ψ(vᵀx + ξ) | c]`, drawing
/// `samples / C` inputs per component. Chunks use independent substreams
/// and are reduced in order, so the result does not depend on `exec`.
pub fn monte_carlo_delta(
    v: &[f64],
    xi: f64,
    mix: &MixtureSpec,
    psi: &Psi,
    samples: usize,
    seed: RngSeed,
    exec: Exec,
) -> Result<McEstimate> {
    let m = mix.dim();
    if mix.density.dim() != m {
        return Err(DynError::Dimension("density dimension must match the token dimension".into()));
    }
    let c = mix.centers.len();
    let per = samples / c;
    if per < 2 {
        return Err(DynError::Invalid("too few samples".into()));
    }
    const CHUNK: usize = 8192;
    let chunks = per.div_ceil(CHUNK);
    let mut mean = vec![0.0; m];
    let mut var = vec![0.0; m];
    for (ci, (center, a)) in mix.centers.iter().zip(&mix.coeffs).enumerate() {
        // Per chunk: sum and sum of squares of x ψ(vᵀx + ξ).
        let parts = exec.map(chunks, |ch| {
            let mut rng = seed.substream((ci * chunks + ch) as u64);
            let n = CHUNK.min(per - ch * CHUNK);
            let mut s1 = vec![0.0; m];
            let mut s2 = vec![0.0; m];
            for _ in 0..n {
                let y = mix.density.sample(&mut rng);
                let x: Vec<f64> = center.iter().zip(&y).map(|(c, y)| c + y).collect();
                let g = psi.eval(dot(v, &x) + xi);
                for l in 0..m {
                    let val = x[l] * g;
                    s1[l] += val;
                    s2[l] += val * val;
                }
            }
            (s1, s2)
        });
        let mut s1 = vec![0.0; m];
        let mut s2 = vec![0.0; m];
        for (p1, p2) in parts {
            for l in 0..m {
                s1[l] += p1[l];
                s2[l] += p2[l];
            }
        }
        let n = per as f64;
        for l in 0..m {
            let mu = s1[l] / n;
            let sample_var = (s2[l] - n * mu * mu).max(0.0) / (n - 1.0);
            mean[l] += a * mu;
            var[l] += a * a * sample_var / n;
        }
    }
    Ok(McEstimate {
        mean,
        std_err: var.into_iter().map(f64::sqrt).collect(),
        samples: per * c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss() -> RadialDensity {
        RadialDensity::StandardGaussian { dim: 3 }
    }

    #[test]
    fn zero_coefficients_give_zero_delta() {
        let mix = MixtureSpec {
            centers: vec![vec![0.2, 0.3, 0.5]],
            coeffs: vec![0.0],
            density: gauss(),
            query: 0,
        };
        let d = delta_nonlinear(&[1.0, -1.0, 0.5], 0.3, &mix, &Psi::Step).unwrap();
        assert!(d.iter().all(|x| *x == 0.0));
        assert!(mix.validate().is_err());
    }

    #[test]
    fn rejects_zero_v() {
        let mix = MixtureSpec {
            centers: vec![vec![1.0, 0.0, 0.0]],
            coeffs: vec![1.0],
            density: gauss(),
            query: 0,
        };
        assert_eq!(delta_nonlinear(&[0.0; 3], 0.0, &mix, &Psi::Step), Err(DynError::ZeroV));
    }

    #[test]
    fn leaky_step_shifts_theta1() {
        let psi = Psi::LeakyStep { neg: 0.1, pos: 1.0 };
        let t = theta1(0.0, &psi, &gauss()).unwrap();
        assert!((t - 0.55).abs() < 1e-10);
    }

    #[test]
    fn tabulated_psi_clamps() {
        let psi = Psi::Tabulated { xs: vec![-1.0, 1.0], ys: vec![0.0, 1.0] };
        assert_eq!(psi.eval(-5.0), 0.0);
        assert_eq!(psi.eval(0.0), 0.5);
        assert_eq!(psi.eval(3.0), 1.0);
        assert!(psi.validate().is_ok());
        assert!(!psi.is_homogeneous());
    }
}
