//! Isotropic densities in `dim` dimensions and their one-dimensional
//! marginals along a fixed direction.

use crate::quad::{integrate_pieces, QuadratureSpec};
use crate::{NumError, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum RadialDensity {
    StandardGaussian { dim: usize },
    UniformBall { radius: f64, dim: usize },
    Custom(Tabulated),
}

/// Density p0(r) tabulated on increasing radii starting at 0, linearly
/// interpolated and zero past the last radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    dim: usize,
    radii: Vec<f64>,
    values: Vec<f64>,
    marginal: Vec<f64>,
    radial_cdf: Vec<f64>,
    /// Marginal on the symmetric grid `-r_N..r_N`, with running zeroth and
    /// first moments at each knot.
    knots: Vec<f64>,
    knot_values: Vec<f64>,
    prefix: Vec<(f64, f64)>,
}

/// Zeroth and first moment of a linear function over `[x0, x1]`.
fn segment_moments(x0: f64, p0: f64, x1: f64, p1: f64) -> (f64, f64) {
    let h = x1 - x0;
    (0.5 * h * (p0 + p1), h / 6.0 * (x0 * (2.0 * p0 + p1) + x1 * (p0 + 2.0 * p1)))
}

/// Surface area of the unit sphere in R^k (the (k-1)-sphere).
fn sphere_area(k: usize) -> f64 {
    if k == 1 {
        return 2.0;
    }
    let h = k as f64 / 2.0;
    (2f64.ln() + h * PI.ln() - ln_gamma(h)).exp()
}

fn ball_volume(dim: usize, radius: f64) -> f64 {
    let h = dim as f64 / 2.0;
    (h * PI.ln() - ln_gamma(h + 1.0) + dim as f64 * radius.ln()).exp()
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x < xs[0] || x > xs[last] {
        return 0.0;
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, last);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let t = (x - x0) / (x1 - x0);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

fn quad_spec() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-10,
        max_subdivisions: 20_000,
        ..QuadratureSpec::default()
    }
}

impl Tabulated {
    pub fn new(dim: usize, radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(NumError::Domain("dimension must be >= 1".into()));
        }
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(NumError::Dimension("need matching radii/values, at least 2".into()));
        }
        if radii[0] != 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(NumError::Domain("radii must start at 0 and increase".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(NumError::InvalidDistribution("negative or non-finite density".into()));
        }
        let mut t = Self {
            dim,
            radii,
            values,
            marginal: Vec::new(),
            radial_cdf: Vec::new(),
            knots: Vec::new(),
            knot_values: Vec::new(),
            prefix: Vec::new(),
        };
        t.radial_cdf = t.radial_cdf_table()?;
        let mass = *t.radial_cdf.last().unwrap();
        if (mass - 1.0).abs() > NORM_TOL {
            return Err(NumError::InvalidDistribution(format!("integrates to {mass}")));
        }
        t.marginal = t.marginal_table()?;
        t.knots = t.radii.iter().skip(1).rev().map(|r| -r).chain(t.radii.iter().copied()).collect();
        t.knot_values = t.marginal.iter().skip(1).rev().chain(t.marginal.iter()).copied().collect();
        let mut acc = (0.0, 0.0);
        t.prefix.push(acc);
        for i in 1..t.knots.len() {
            let (a, b) = segment_moments(t.knots[i - 1], t.knot_values[i - 1], t.knots[i], t.knot_values[i]);
            acc = (acc.0 + a, acc.1 + b);
            t.prefix.push(acc);
        }
        Ok(t)
    }

    /// Tabulates `f` on `radii` and rescales it to unit mass.
    pub fn from_fn(dim: usize, radii: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = radii.iter().map(|&r| f(r)).collect();
        let probe = Self {
            dim,
            radii: radii.clone(),
            values: values.clone(),
            marginal: Vec::new(),
            radial_cdf: Vec::new(),
            knots: Vec::new(),
            knot_values: Vec::new(),
            prefix: Vec::new(),
        };
        let mass = *probe.radial_cdf_table()?.last().unwrap();
        if !(mass > 0.0) {
            return Err(NumError::InvalidDistribution("zero mass".into()));
        }
        Self::new(dim, radii, values.into_iter().map(|v| v / mass).collect())
    }

    pub fn radial(&self, r: f64) -> f64 {
        interp(&self.radii, &self.values, r)
    }

    /// `(∫ p_n, ∫ y p_n)` over `(-inf, x]`, exact for the interpolated
    /// marginal.
    pub fn marginal_cumulative(&self, x: f64) -> (f64, f64) {
        let last = self.knots.len() - 1;
        if x <= self.knots[0] {
            return (0.0, 0.0);
        }
        if x >= self.knots[last] {
            return self.prefix[last];
        }
        let i = self.knots.partition_point(|&k| k <= x).clamp(1, last) - 1;
        let px = interp(&self.knots, &self.knot_values, x);
        let (a, b) = segment_moments(self.knots[i], self.knot_values[i], x, px);
        (self.prefix[i].0 + a, self.prefix[i].1 + b)
    }

    pub fn support(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    fn radial_cdf_table(&self) -> Result<Vec<f64>> {
        let area = sphere_area(self.dim);
        let spec = quad_spec();
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for w in self.radii.windows(2) {
            let piece = integrate_pieces(
                |r| area * r.powi(self.dim as i32 - 1) * self.radial(r),
                w,
                &spec,
            )?;
            acc += piece;
            out.push(acc);
        }
        Ok(out)
    }

    fn marginal_table(&self) -> Result<Vec<f64>> {
        if self.dim == 1 {
            return Ok(self.values.clone());
        }
        let spec = quad_spec();
        let area = sphere_area(self.dim - 1);
        let k = self.dim as i32 - 2;
        self.radii
            .iter()
            .map(|&y| {
                // Breakpoints where sqrt(y^2 + l^2) crosses a grid radius.
                let mut pts = vec![0.0];
                pts.extend(
                    self.radii
                        .iter()
                        .filter(|&&r| r > y)
                        .map(|&r| (r * r - y * y).sqrt()),
                );
                if pts.len() < 2 {
                    return Ok(0.0);
                }
                let v = integrate_pieces(
                    |l| self.radial((y * y + l * l).sqrt()) * l.powi(k),
                    &pts,
                    &spec,
                )?;
                Ok(area * v)
            })
            .collect()
    }

    fn sample_radius<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random::<f64>() * self.radial_cdf.last().unwrap();
        let i = self.radial_cdf.partition_point(|&c| c < u).clamp(1, self.radii.len() - 1);
        let (c0, c1) = (self.radial_cdf[i - 1], self.radial_cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.radii[i - 1] + t * (self.radii[i] - self.radii[i - 1])
    }
}

impl RadialDensity {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::StandardGaussian { dim } | Self::UniformBall { dim, .. } if *dim == 0 => {
                Err(NumError::Domain("dimension must be >= 1".into()))
            }
            Self::UniformBall { radius, .. } if !(*radius > 0.0 && radius.is_finite()) => {
                Err(NumError::Domain("ball radius must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::StandardGaussian { dim } | Self::UniformBall { dim, .. } => *dim,
            Self::Custom(t) => t.dim,
        }
    }

    /// Density value at any point of norm `r`.
    pub fn radial(&self, r: f64) -> f64 {
        match self {
            Self::StandardGaussian { dim } => {
                (-0.5 * r * r).exp() / (2.0 * PI).powf(*dim as f64 / 2.0)
            }
            Self::UniformBall { radius, dim } => {
                if r.abs() <= *radius {
                    1.0 / ball_volume(*dim, *radius)
                } else {
                    0.0
                }
            }
            Self::Custom(t) => t.radial(r.abs()),
        }
    }

    /// Half-width of the region carrying the marginal's mass; `None`
    /// when the support is unbounded.
    pub fn support(&self) -> Option<f64> {
        match self {
            Self::StandardGaussian { .. } => None,
            Self::UniformBall { radius, .. } => Some(*radius),
            Self::Custom(t) => Some(t.support()),
        }
    }

    /// One-dimensional marginal density of a single coordinate.
    ///
    /// Gaussian is closed form; the others integrate p0 over the
    /// orthogonal (dim-1)-dimensional slice.
    pub fn marginal(&self, y: f64) -> f64 {
        let y = y.abs();
        match self {
            Self::StandardGaussian { .. } => (-0.5 * y * y).exp() / (2.0 * PI).sqrt(),
            Self::UniformBall { radius, dim } => {
                if y >= *radius {
                    return 0.0;
                }
                let p0 = 1.0 / ball_volume(*dim, *radius);
                if *dim == 1 {
                    return p0;
                }
                let top = (radius * radius - y * y).sqrt();
                let k = *dim as i32 - 2;
                let v = integrate_pieces(|l| l.powi(k), &[0.0, top], &quad_spec())
                    .expect("polynomial integrand converges");
                sphere_area(dim - 1) * p0 * v
            }
            Self::Custom(t) => interp(&t.radii, &t.marginal, y),
        }
    }

    /// Points where the marginal is not smooth, for use as quadrature
    /// breakpoints. Empty for closed-form densities.
    pub fn marginal_knots(&self) -> Vec<f64> {
        match self {
            Self::Custom(t) => {
                let mut v: Vec<f64> = t.radii.iter().skip(1).rev().map(|r| -r).collect();
                v.extend(t.radii.iter().copied());
                v
            }
            _ => Vec::new(),
        }
    }

    /// Draws one isotropic sample in `dim` dimensions.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let dim = self.dim();
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Self::StandardGaussian { .. } = self {
            return g;
        }
        let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = match self {
            Self::UniformBall { radius, .. } => radius * rng.random::<f64>().powf(1.0 / dim as f64),
            Self::Custom(t) => t.sample_radius(rng),
            Self::StandardGaussian { .. } => unreachable!(),
        };
        g.into_iter().map(|v| v / n * r).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn rejects_unnormalised_table() {
        let r = vec![0.0, 1.0];
        assert!(Tabulated::new(1, r.clone(), vec![1.0, 1.0]).is_err());
        assert!(Tabulated::new(1, r, vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn rejects_bad_grid() {
        assert!(Tabulated::new(1, vec![0.1, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Tabulated::new(1, vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(Tabulated::new(1, vec![0.0, 1.0], vec![-0.5, 1.5]).is_err());
    }
}
