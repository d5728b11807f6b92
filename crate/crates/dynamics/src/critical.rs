//! Stationary points of the mixture field for two-component mixtures.
//!
//! With a homogeneous activation the field is unchanged by scaling
//! `(v, ξ)`, so stationary points come in rays; they are located on the
//! slice `‖v‖ = 1`. There `ξ̇ = 0` forces `a₁θ₁(ρ₁) = -a₂θ₁(ρ₂)`, the
//! weight update then lies along `x̄₁ - x̄₂`, and a nonzero root needs
//! `v = ±(x̄₁ - x̄₂)/d` with `h(ρ₁) - h(ρ₂) = ∓d` for `h = θ₂/θ₁`.

use crate::nonlinear::{delta_and_xi_rate, theta1, theta2, MixtureSpec, Psi};
use crate::{DynError, Result};
use joma_num::matrix::{dot, norm};
use joma_num::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct StationaryPoint {
    pub v: Vec<f64>,
    pub xi: f64,
    /// Mixture coefficients at which the point is stationary.
    pub coeffs: Vec<f64>,
    /// Max-abs value of the field (weight and bias rates) at the point.
    pub field_residual: f64,
}

fn h_ratio(r: f64, psi: &Psi, mix: &MixtureSpec) -> Result<Option<f64>> {
    let t1 = theta1(r, psi, &mix.density)?;
    if t1 < 1e-10 {
        return Ok(None);
    }
    Ok(Some(theta2(r, psi, &mix.density)? / t1))
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let mut flo = f(lo)?;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Field values `(Δ, ξ̇)` with `coeffs[1]` replaced by `a2`.
fn field(v: &[f64], xi: f64, a2: f64, mix: &MixtureSpec, psi: &Psi) -> Result<Vec<f64>> {
    let mut m = mix.clone();
    m.coeffs[1] = a2;
    let (mut d, xr) = delta_and_xi_rate(v, xi, &m, psi)?;
    d.push(xr);
    Ok(d)
}

/// Newton iteration on `(v, ξ, a₂)` for `Δ = 0`, `ξ̇ = 0`, `‖v‖ = 1`.
pub fn newton_polish(
    v0: &[f64],
    xi0: f64,
    a2_0: f64,
    mix: &MixtureSpec,
    psi: &Psi,
) -> Result<StationaryPoint> {
    let m = v0.len();
    let n = m + 2;
    let residual = |u: &[f64]| -> Result<Vec<f64>> {
        let mut r = field(&u[..m], u[m], u[m + 1], mix, psi)?;
        r.push(dot(&u[..m], &u[..m]) - 1.0);
        Ok(r)
    };
    let mut u: Vec<f64> = v0.to_vec();
    u.push(xi0);
    u.push(a2_0);
    let mut r = residual(&u)?;
    for _ in 0..40 {
        let size = r.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if size < 1e-13 {
            break;
        }
        let h = 1e-6;
        let mut jac = vec![0.0; n * n];
        for c in 0..n {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[c] += h;
            dn[c] -= h;
            let (fu, fd) = (residual(&up)?, residual(&dn)?);
            for row in 0..n {
                jac[row * n + c] = (fu[row] - fd[row]) / (2.0 * h);
            }
        }
        let step = Matrix::new(n, n, jac)?.solve(&r)?;
        // Damped update: halve until the residual shrinks.
        let mut lambda = 1.0;
        loop {
            let cand: Vec<f64> = u.iter().zip(&step).map(|(a, s)| a - lambda * s).collect();
            if let Ok(rc) = residual(&cand) {
                let new = rc.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                if new < size || lambda < 1e-4 {
                    u = cand;
                    r = rc;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                return Err(DynError::Invalid("newton iteration stalled".into()));
            }
        }
    }
    let field_residual = r[..m + 1].iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut coeffs = mix.coeffs.clone();
    coeffs[1] = u[m + 1];
    Ok(StationaryPoint {
        v: u[..m].to_vec(),
        xi: u[m],
        coeffs,
        field_residual,
    })
}

/// Constructs every stationary point on `‖v‖ = 1` for a two-center
/// mixture, holding `a₁ = mix.coeffs[0]` and solving for `a₂`. Affinities
/// are scanned over `[-span, span]` in steps of `grid`.
pub fn two_component_candidates(
    mix: &MixtureSpec,
    psi: &Psi,
    span: f64,
    grid: f64,
) -> Result<Vec<StationaryPoint>> {
    mix.validate()?;
    if mix.centers.len() != 2 || !psi.is_homogeneous() {
        return Err(DynError::Invalid("needs two centers and a homogeneous activation".into()));
    }
    let diff: Vec<f64> = mix.centers[0].iter().zip(&mix.centers[1]).map(|(a, b)| a - b).collect();
    let d = norm(&diff);
    if d == 0.0 {
        return Err(DynError::Invalid("centers coincide".into()));
    }
    let a1 = mix.coeffs[0];
    let mut out = Vec::new();
    for sigma in [1.0, -1.0] {
        let v: Vec<f64> = diff.iter().map(|x| sigma * x / d).collect();
        // q(ρ₂) = h(ρ₂ + σd) - h(ρ₂) + σd
        let q = |r2: f64| -> Result<Option<f64>> {
            match (h_ratio(r2 + sigma * d, psi, mix)?, h_ratio(r2, psi, mix)?) {
                (Some(h1), Some(h2)) => Ok(Some(h1 - h2 + sigma * d)),
                _ => Ok(None),
            }
        };
        let steps = (2.0 * span / grid).ceil() as usize;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=steps {
            let r2 = -span + i as f64 * grid;
            let cur = q(r2)?.map(|val| (r2, val));
            if let (Some((r0, q0)), Some((r1, q1))) = (prev, cur) {
                if q0 == 0.0 || (q0 > 0.0) != (q1 > 0.0) {
                    let root = bisect(r0, r1, |r| Ok(q(r)?.unwrap_or(f64::NAN)))?;
                    let rho1 = root + sigma * d;
                    let xi = root - dot(&v, &mix.centers[1]);
                    let a2 = -a1 * theta1(rho1, psi, &mix.density)? / theta1(root, psi, &mix.density)?;
                    let f = field(&v, xi, a2, mix, psi)?;
                    let mut coeffs = mix.coeffs.clone();
                    coeffs[1] = a2;
                    out.push(StationaryPoint {
                        v: v.clone(),
                        xi,
                        coeffs,
                        field_residual: f.iter().fold(0.0f64, |a, b| a.max(b.abs())),
                    });
                }
            }
            prev = cur;
        }
    }
    Ok(out)
}
