//! Runners for the nonlinear-activation integrals and stationary points.

use super::CsvFile;
use crate::config::{CriticalConfig, DensityConfig, ThetaConfig};
use crate::error::CliError;
use joma_dynamics::critical::{newton_polish, two_component_candidates, StationaryPoint};
use joma_dynamics::nonlinear::{critical_residual, theta1, theta2, F_of_r, MixtureSpec, Psi};
use joma_num::density::Tabulated;
use joma_num::{Exec, RadialDensity};
use std::f64::consts::PI;

pub fn density(c: &DensityConfig) -> Result<RadialDensity, CliError> {
    let d = match c {
        DensityConfig::Gaussian { dim } => RadialDensity::StandardGaussian { dim: *dim },
        DensityConfig::Ball { dim, radius } => RadialDensity::UniformBall {
            radius: *radius,
            dim: *dim,
        },
        DensityConfig::ScaleMixture {
            dim,
            weights,
            scales,
            extent,
            knots,
        } => {
            if weights.len() != scales.len() || weights.is_empty() || *knots < 2 {
                return Err(CliError::Config("scale mixture needs matching weights and scales".into()));
            }
            let n = *dim as i32;
            // Quadratic spacing puts more knots near the origin, where the
            // narrow components live.
            let radii: Vec<f64> = (0..*knots).map(|i| extent * (i as f64 / (*knots - 1) as f64).powi(2)).collect();
            let f = |r: f64| -> f64 {
                weights
                    .iter()
                    .zip(scales)
                    .map(|(w, s)| w * (-0.5 * r * r / (s * s)).exp() / (2.0 * PI * s * s).powf(0.5 * n as f64))
                    .sum()
            };
            RadialDensity::Custom(Tabulated::from_fn(*dim, radii, f)?)
        }
    };
    d.validate()?;
    Ok(d)
}

pub const THETA_HEADER: &[&str] = &["r", "theta1", "theta2", "F"];

pub struct ThetaTable {
    pub r: Vec<f64>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub f: Vec<f64>,
}

impl ThetaTable {
    pub fn files(&self) -> Vec<CsvFile> {
        let mut f = CsvFile::with_header("theta.csv", THETA_HEADER);
        for i in 0..self.r.len() {
            f.push_nums(&[self.r[i], self.theta1[i], self.theta2[i], self.f[i]]);
        }
        vec![f]
    }
}

/// θ₁, θ₂ and F for ReLU (ψ = step) on an even grid.
pub fn theta_tables(c: &ThetaConfig, exec: Exec) -> Result<ThetaTable, CliError> {
    let p = density(&c.density)?;
    let psi = Psi::Step;
    let r: Vec<f64> = (0..c.points)
        .map(|i| c.r_min + (c.r_max - c.r_min) * i as f64 / (c.points - 1) as f64)
        .collect();
    let rows = exec.map(r.len(), |i| -> Result<[f64; 3], CliError> {
        Ok([theta1(r[i], &psi, &p)?, theta2(r[i], &psi, &p)?, F_of_r(r[i], &psi, &p)?])
    });
    let mut t = ThetaTable {
        r,
        theta1: Vec::new(),
        theta2: Vec::new(),
        f: Vec::new(),
    };
    for row in rows {
        let [a, b, f] = row?;
        t.theta1.push(a);
        t.theta2.push(b);
        t.f.push(f);
    }
    Ok(t)
}

pub fn critical_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = (0..dim).map(|l| format!("v_{l}")).collect();
    for s in ["xi", "a1", "a2", "field_residual", "critical_residual"] {
        h.push(s.into());
    }
    h
}

pub struct CriticalReport {
    pub dim: usize,
    pub points: Vec<StationaryPoint>,
    pub residuals: Vec<f64>,
}

impl CriticalReport {
    pub fn files(&self) -> Vec<CsvFile> {
        let mut f = CsvFile::new("critical.csv", critical_header(self.dim));
        for (p, r) in self.points.iter().zip(&self.residuals) {
            let mut row = p.v.clone();
            row.extend([p.xi, p.coeffs[0], p.coeffs[1], p.field_residual, *r]);
            f.push_nums(&row);
        }
        vec![f]
    }
}

/// Locates stationary points on `‖v‖ = 1`, polishes each by Newton from a
/// perturbed start, and evaluates the critical-point residual there.
pub fn critical_points(c: &CriticalConfig) -> Result<CriticalReport, CliError> {
    let mix = MixtureSpec {
        centers: c.centers.clone(),
        coeffs: vec![c.a1, -c.a1],
        density: density(&c.density)?,
        query: 0,
    };
    let psi = Psi::Step;
    let mut points = Vec::new();
    let mut residuals = Vec::new();
    for cand in two_component_candidates(&mix, &psi, c.span, c.grid)? {
        let v0: Vec<f64> = cand.v.iter().enumerate().map(|(i, x)| x + 0.01 * (i as f64 + 1.0)).collect();
        let p = newton_polish(&v0, cand.xi + 0.01, cand.coeffs[1] * 1.01, &mix, &psi)?;
        let mut m = mix.clone();
        m.coeffs = p.coeffs.clone();
        residuals.push(critical_residual(&p.v, p.xi, &m, &psi)?);
        points.push(p);
    }
    Ok(CriticalReport {
        dim: c.centers[0].len(),
        points,
        residuals,
    })
}
