//! Self-check suites with a machine-readable report.

use crate::config::{AttentionName, CooccurConfig, CriticalConfig, Fig3Config, Thm1Config, Thm4Config, ThetaConfig};
use crate::error::CliError;
use crate::experiments::{dynamics, hblt, nonlinear};
use joma_dynamics::nonlinear::{delta_nonlinear, monte_carlo_delta, theta1, theta2, F_of_r};
use joma_dynamics::{AttentionKind, MixtureSpec, Psi};
use joma_num::{g_func, Exec, G_func, RadialDensity, RngSeed};
use joma_transformer::grad::gradcheck;
use joma_transformer::{Activation, Example, LossPositions, ModelDims, ModelParams, Objective, Optimizer, TrainConfig, Window};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Invariants,
    Oracles,
    Gradcheck,
    Bounds,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 5] = ["invariants", "oracles", "gradcheck", "bounds", "all"];
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "invariants" => Suite::Invariants,
            "oracles" => Suite::Oracles,
            "gradcheck" => Suite::Gradcheck,
            "bounds" => Suite::Bounds,
            "all" => Suite::All,
            _ => return Err(CliError::Config(format!("unknown suite {s}; expected one of {:?}", Suite::NAMES))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [Suite::Invariants, Suite::Oracles, Suite::Gradcheck, Suite::Bounds, Suite::All]
            .iter()
            .position(|s| s == self)
            .unwrap();
        f.write_str(Suite::NAMES[i])
    }
}

/// One check: `measured` must be at most `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            pass: measured <= threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub fn run(suite: Suite, exec: Exec) -> Result<Report, CliError> {
    let checks = match suite {
        Suite::Invariants => invariants()?,
        Suite::Oracles => oracles(exec)?,
        Suite::Gradcheck => gradchecks()?,
        Suite::Bounds => bounds(exec)?,
        Suite::All => {
            let mut c = invariants()?;
            c.extend(oracles(exec)?);
            c.extend(gradchecks()?);
            c.extend(bounds(exec)?);
            c
        }
    };
    Ok(Report {
        suite,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

fn invariants() -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    for attention in [AttentionName::Exp, AttentionName::Linear] {
        let r = dynamics::thm1(&Thm1Config {
            attention,
            ..Default::default()
        })?;
        out.push(Check::at_most(
            format!("coupled_{}_relative_residual", attention.as_str()),
            r.relative(0),
            1e-2,
        ));
    }
    let f3 = dynamics::fig3(&Fig3Config::default())?;
    out.push(Check::at_most("linear_erf_ratio_residual", f3.max_ratio_residual(SQRT_2), 1e-3));
    let t4 = dynamics::thm4(&Thm4Config::default())?;
    for (case, tol) in t4.cases.iter().zip([0.1, 0.02]) {
        out.push(Check::at_most(
            format!("convergence_ratio_mu_{}_{}", case.mu[0], case.mu[1]),
            case.rel_err(),
            tol,
        ));
    }
    Ok(out)
}

fn random_mixture(rng: &mut impl Rng, dim: usize) -> (MixtureSpec, Vec<f64>, f64) {
    let mix = MixtureSpec {
        centers: (0..2).map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()).collect(),
        coeffs: (0..2).map(|_| rng.random_range(-1.0..1.0)).collect(),
        density: RadialDensity::StandardGaussian { dim },
        query: 0,
    };
    let v = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    (mix, v, rng.random_range(-0.5..0.5))
}

fn oracles(exec: Exec) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let gauss = RadialDensity::StandardGaussian { dim: 1 };
    out.push(Check::at_most("theta1_at_0", (theta1(0.0, &Psi::Step, &gauss)? - 0.5).abs(), 1e-6));
    out.push(Check::at_most(
        "theta2_at_0",
        (theta2(0.0, &Psi::Step, &gauss)? - 0.398942).abs(),
        1e-6,
    ));
    let co = hblt::cooccur(&CooccurConfig::default(), exec)?;
    out.push(Check::at_most("hblt_analytic_vs_enumeration", co.max_exact_gap().unwrap_or(f64::NAN), 1e-12));
    out.push(Check::at_most("hblt_analytic_vs_sampled_z", co.max_z(), 3.0));
    let mut rng = RngSeed(7).rng();
    let mut worst = 0.0f64;
    for i in 0..3 {
        let (mix, v, xi) = random_mixture(&mut rng, 3);
        let exact = delta_nonlinear(&v, xi, &mix, &Psi::Step)?;
        let mc = monte_carlo_delta(&v, xi, &mix, &Psi::Step, 200_000, RngSeed(100 + i), exec)?;
        for j in 0..exact.len() {
            worst = worst.max((exact[j] - mc.mean[j]).abs() / mc.std_err[j]);
        }
    }
    out.push(Check::at_most("mixture_field_vs_monte_carlo_z", worst, 3.0));
    Ok(out)
}

fn gradchecks() -> Result<Vec<Check>, CliError> {
    let mut rng = RngSeed(3).rng();
    let batch: Vec<Example> = (0..4)
        .map(|i| Example {
            tokens: (0..3 + i).map(|_| rng.random_range(0..5)).collect(),
            class: i % 3,
        })
        .collect();
    let mut worst = 0.0f64;
    for attention in [AttentionKind::Softmax, AttentionKind::Exp { normalizer: 1.0 }, AttentionKind::Linear] {
        for objective in [Objective::CrossEntropy, Objective::NodePayoff] {
            for window in [Window::Causal, Window::Full] {
                // Linear activation keeps the loss smooth, so central
                // differences are exact up to rounding.
                let cfg = TrainConfig {
                    dims: ModelDims {
                        vocab: 5,
                        d: 10,
                        hidden: 4,
                        classes: 3,
                        layers: 2,
                    },
                    objective,
                    optimizer: Optimizer::Sgd,
                    lr: 0.1,
                    steps: 1,
                    batch: 4,
                    seed: 1,
                    activation: Activation::Linear,
                    attention,
                    window,
                    loss_at: LossPositions::All,
                    stride: 1,
                    init_scale: 1.0,
                };
                let mut p = ModelParams::init(cfg.dims, attention, 1.0, RngSeed(5))?;
                for l in &mut p.train.layers {
                    for z in l.z.as_mut_slice() {
                        *z += rng.random_range(-0.5..0.5);
                    }
                }
                worst = worst.max(gradcheck(&p, &batch, &cfg, 1e-5)?);
            }
        }
    }
    Ok(vec![Check::at_most("max_relative_gradient_error", worst, 1e-4)])
}

fn bounds(exec: Exec) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    let ys: Vec<f64> = (0..=20_000).map(|i| i as f64 * 1e-3).collect();
    let mut g_max = f64::NEG_INFINITY;
    let mut big_g = (f64::INFINITY, f64::NEG_INFINITY);
    for &y in &ys {
        g_max = g_max.max(g_func(y)?);
        let v = G_func(y)?;
        big_g = (big_g.0.min(v), big_g.1.max(v));
    }
    out.push(Check::at_most("g_max_minus_bound", g_max - 1.0 / SQRT_2, 0.0));
    out.push(Check::at_most("G_below_zero", -big_g.0, 0.0));
    out.push(Check::at_most("G_above_one", big_g.1 - 1.0, 0.0));

    let t = nonlinear::theta_tables(&ThetaConfig::default(), exec)?;
    let drop = t.f.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    // Rounding in the flat left tail leaves steps of a few ulps.
    out.push(Check::at_most("F_largest_decrease", drop, 1e-12));
    let p = nonlinear::density(&ThetaConfig::default().density)?;
    let h = 1e-4;
    let mut fd = 0.0f64;
    for &r in t.r.iter().step_by(10) {
        let d = (F_of_r(r + h, &Psi::Step, &p)? - F_of_r(r - h, &Psi::Step, &p)?) / (2.0 * h);
        fd = fd.max((d - theta1(r, &Psi::Step, &p)?).abs());
    }
    out.push(Check::at_most("F_derivative_vs_theta1", fd, 1e-4));

    let c = nonlinear::critical_points(&CriticalConfig::default())?;
    let worst = c.residuals.iter().map(|r| r.abs()).fold(0.0, f64::max);
    out.push(Check::at_most("critical_residual", if c.residuals.is_empty() { f64::NAN } else { worst }, 1e-4));
    Ok(out)
}
