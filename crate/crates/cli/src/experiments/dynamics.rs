//! Runners for the ODE experiments: coupled logit/weight flow, the
//! reduced linear and nonlinear flows, and the convergence ratio.

use super::{num, CsvFile};
use crate::config::{AttentionName, Fig2Config, Fig3Config, Fig4Config, InputShape, Thm1Config, Thm4Config};
use crate::error::CliError;
use joma_dynamics::coupled::{run_coupled, CoupledRun};
use joma_dynamics::reduced::{
    attention_entropy_of, convergence_ratio, erf_ratio_residual, linear_field, nonlinear_field, run_reduced, RatioSeries,
    ReducedRun, RunSpec, StepGuard,
};
use joma_dynamics::{AttentionKind, CoupledState, GradStats, Integrator, ReducedState, Trajectory};
use joma_num::{erf_inv, Exec, RngSeed};
use rand::Rng;
use rand_distr::Exp1;
use std::f64::consts::SQRT_2;

pub fn trajectory_csv(name: &str, traj: &Trajectory) -> CsvFile {
    let mut header = vec!["t".to_string()];
    header.extend(traj.columns().iter().cloned());
    let mut f = CsvFile::new(name, header);
    for (t, row) in traj.times().iter().zip(traj.rows()) {
        let mut cells = vec![num(*t)];
        cells.extend(row.iter().map(|v| num(*v)));
        f.push(cells);
    }
    f
}

pub fn coupled_header(tokens: usize, nodes: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..tokens).map(|l| format!("z_{l}")));
    h.extend((0..tokens).map(|l| format!("zhat_{l}")));
    for k in 0..nodes {
        h.extend((0..tokens).map(|l| format!("v_{l}_{k}")));
    }
    h.push("residual".into());
    h
}

fn dirichlet<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

pub const THM1_SUMMARY: &[&str] = &["eta", "steps", "residual", "z_inf", "relative_residual"];

pub struct Thm1Report {
    pub kind: AttentionKind,
    pub steps: u64,
    /// The run at `eta`, and the same number of steps at `eta / 2`.
    pub runs: [(f64, CoupledRun); 2],
}

impl Thm1Report {
    pub fn residual(&self, i: usize) -> f64 {
        self.runs[i].1.terminal_residual(self.kind)
    }

    pub fn z_inf(&self, i: usize) -> f64 {
        max_abs(&self.runs[i].1.last.z)
    }

    /// Terminal residual relative to `‖z‖∞`, or to `‖z‖∞²` for linear
    /// attention, whose invariant is quadratic in `z`.
    pub fn relative(&self, i: usize) -> f64 {
        let z = self.z_inf(i);
        let scale = if self.kind == AttentionKind::Linear { z * z } else { z };
        self.residual(i) / scale
    }

    /// Residual at `eta` over residual at `eta / 2`.
    pub fn halving_factor(&self) -> f64 {
        self.residual(0) / self.residual(1)
    }

    pub fn files(&self) -> Vec<CsvFile> {
        let mut s = CsvFile::with_header("summary.csv", THM1_SUMMARY);
        for (i, (eta, _)) in self.runs.iter().enumerate() {
            s.push(vec![
                num(*eta),
                self.steps.to_string(),
                num(self.residual(i)),
                num(self.z_inf(i)),
                num(self.relative(i)),
            ]);
        }
        vec![trajectory_csv("trajectory.csv", &self.runs[0].1.trajectory), s]
    }
}

/// Random class-conditional frequencies (Dirichlet(1)), node
/// coefficients uniform on `[-0.5, 0.5]`, and equal class weights.
pub fn random_stats(tokens: usize, nodes: usize, classes: usize, seed: u64) -> Result<GradStats, CliError> {
    let mut rng = RngSeed(seed).rng();
    let centers: Vec<Vec<f64>> = (0..classes).map(|_| dirichlet(tokens, &mut rng)).collect();
    let coeffs: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..nodes).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    Ok(GradStats::new(centers, coeffs, vec![1.0 / classes as f64; classes])?)
}

pub fn thm1(c: &Thm1Config) -> Result<Thm1Report, CliError> {
    let stats = random_stats(c.tokens, c.nodes, c.classes, c.seed)?;
    let kind = c.kind();
    let init = CoupledState::with_logits(vec![c.logit0(); c.tokens], c.nodes);
    let steps = c.steps();
    let run = |eta: f64| run_coupled(init.clone(), &stats, kind, eta, steps, c.stride);
    Ok(Thm1Report {
        kind,
        steps,
        runs: [(c.eta, run(c.eta)?), (c.eta / 2.0, run(c.eta / 2.0)?)],
    })
}

pub const FIG2_SUMMARY: &[&str] = &["shape", "correlation", "z_inf"];

pub struct Fig2Report {
    pub shape: InputShape,
    pub run: CoupledRun,
    pub tokens: usize,
}

impl Fig2Report {
    /// Pearson correlation of `z_l(t)` with its estimate, pooled over
    /// every snapshot and token.
    pub fn correlation(&self) -> f64 {
        let m = self.tokens;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for row in self.run.trajectory.rows() {
            xs.extend_from_slice(&row[..m]);
            ys.extend_from_slice(&row[m..2 * m]);
        }
        pearson(&xs, &ys)
    }

    pub fn files(&self) -> Vec<CsvFile> {
        let mut s = CsvFile::with_header("summary.csv", FIG2_SUMMARY);
        let shape = match self.shape {
            InputShape::Smooth => "smooth",
            InputShape::Random => "random",
        };
        s.push(vec![shape.into(), num(self.correlation()), num(max_abs(&self.run.last.z))]);
        vec![trajectory_csv("trajectory.csv", &self.run.trajectory), s]
    }
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// One class per hidden node; node `k` is pushed up by class `k` and down
/// by the others, `a[c][k] = (1[c = k] - 1/C) / C`.
pub fn fig2(c: &Fig2Config) -> Result<Fig2Report, CliError> {
    let (m, n) = (c.tokens, c.classes);
    let centers: Vec<Vec<f64>> = match c.shape {
        InputShape::Smooth => (0..n)
            .map(|k| {
                let mid = (k as f64 + 0.5) * m as f64 / n as f64;
                let raw: Vec<f64> = (0..m).map(|l| (-0.5 * ((l as f64 - mid) / c.width).powi(2)).exp()).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|x| x / s).collect()
            })
            .collect(),
        InputShape::Random => {
            let mut rng = RngSeed(c.seed).rng();
            (0..n).map(|_| dirichlet(m, &mut rng)).collect()
        }
    };
    let coeffs: Vec<Vec<f64>> = (0..n)
        .map(|cl| (0..n).map(|k| ((cl == k) as u8 as f64 - 1.0 / n as f64) / n as f64).collect())
        .collect();
    let stats = GradStats::new(centers, coeffs, vec![1.0 / n as f64; n])?;
    let run = run_coupled(CoupledState::zeros(m, n), &stats, AttentionKind::Softmax, c.eta, c.steps, c.stride)?;
    Ok(Fig2Report {
        shape: c.shape,
        run,
        tokens: m,
    })
}

pub fn fig3_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..n).map(|l| format!("v_{l}")));
    h.push("erf_residual_2".into());
    h.push("erf_residual_sqrt2".into());
    h
}

pub const FIG3_SUMMARY: &[&str] = &[
    "scale",
    "component",
    "delta",
    "final",
    "plateau",
    "rel_err",
    "max_ratio_residual",
    "capped",
];

pub struct Fig3Report {
    pub delta: Vec<f64>,
    pub run: ReducedRun,
    pub cap: f64,
}

impl Fig3Report {
    fn residual_column(&self, scale: f64) -> usize {
        self.delta.len() + usize::from(scale != 2.0)
    }

    /// Largest erf-ratio residual over all snapshots for `erf(v / scale)`.
    pub fn max_ratio_residual(&self, scale: f64) -> f64 {
        let col = self.residual_column(scale);
        self.run.trajectory.rows().iter().map(|r| r[col]).fold(0.0, f64::max)
    }

    fn fastest(&self) -> usize {
        (0..self.delta.len()).max_by(|&a, &b| self.delta[a].total_cmp(&self.delta[b])).unwrap()
    }

    /// Plateau of component `l` predicted from the conserved ratios at
    /// `scale` when the fastest component diverges.
    pub fn plateau(&self, l: usize, scale: f64) -> f64 {
        let top = self.delta[self.fastest()];
        if l == self.fastest() {
            return f64::INFINITY;
        }
        scale * erf_inv(self.delta[l] / top).unwrap_or(f64::NAN)
    }

    pub fn final_value(&self, l: usize) -> f64 {
        self.run.last.v[l]
    }

    /// The fastest component reached the cap.
    pub fn diverged(&self) -> bool {
        self.run.capped && self.final_value(self.fastest()).abs() >= self.cap * 0.99
    }

    pub fn files(&self) -> Vec<CsvFile> {
        let mut s = CsvFile::with_header("summary.csv", FIG3_SUMMARY);
        for scale in [2.0, SQRT_2] {
            for l in 0..self.delta.len() {
                let p = self.plateau(l, scale);
                let fin = self.final_value(l);
                s.push(vec![
                    num(scale),
                    l.to_string(),
                    num(self.delta[l]),
                    num(fin),
                    num(p),
                    num(if p.is_finite() { (fin - p).abs() / p.abs() } else { f64::NAN }),
                    num(self.max_ratio_residual(scale)),
                    (self.diverged() as u8).to_string(),
                ]);
            }
        }
        vec![trajectory_csv("trajectory.csv", &self.run.trajectory), s]
    }
}

pub fn fig3(c: &Fig3Config) -> Result<Fig3Report, CliError> {
    let n = c.delta.len();
    let spec = RunSpec {
        eta: c.eta,
        t_end: c.t_end,
        snapshot_dt: c.snapshot_dt,
        integrator: Integrator::Rk4,
        guard: StepGuard {
            cap: c.cap,
            max_increment: c.max_increment,
        },
    };
    let delta = c.delta.clone();
    let extra = |s: &ReducedState| -> Vec<f64> {
        [2.0, SQRT_2]
            .iter()
            .map(|sc| erf_ratio_residual(&s.v, &delta, *sc).unwrap_or(f64::NAN))
            .collect()
    };
    let run = run_reduced(
        ReducedState::new(vec![0.0; n]),
        linear_field(&c.delta),
        &spec,
        &extra,
        &["erf_residual_2", "erf_residual_sqrt2"],
    )?;
    Ok(Fig3Report {
        delta: c.delta.clone(),
        run,
        cap: c.cap,
    })
}

pub fn fig4_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((0..n).map(|l| format!("v_{l}")));
    h.push("entropy".into());
    h
}

pub fn fig4_summary_header(n: usize) -> Vec<String> {
    let mut h = vec!["trial".to_string()];
    h.extend((0..n).map(|l| format!("mu_{l}")));
    for s in ["entropy_start", "entropy_min", "t_min", "entropy_end", "rebound_fraction", "interior"] {
        h.push(s.into());
    }
    h
}

pub struct EntropyTrial {
    pub mu: Vec<f64>,
    pub run: ReducedRun,
}

impl EntropyTrial {
    fn entropy(&self) -> Vec<f64> {
        self.run.trajectory.column("entropy").expect("entropy column")
    }

    fn argmin(&self) -> usize {
        let e = self.entropy();
        (0..e.len()).min_by(|&a, &b| e[a].total_cmp(&e[b])).unwrap()
    }

    /// The minimum is attained strictly inside the run.
    pub fn interior_min(&self) -> bool {
        let i = self.argmin();
        i > 0 && i + 1 < self.entropy().len()
    }

    /// `(H_end - H_min) / (H_start - H_min)`
    pub fn rebound_fraction(&self) -> f64 {
        let e = self.entropy();
        let min = e[self.argmin()];
        (e[e.len() - 1] - min) / (e[0] - min)
    }
}

pub struct Fig4Report {
    pub trials: Vec<EntropyTrial>,
}

impl Fig4Report {
    pub fn files(&self) -> Vec<CsvFile> {
        let dim = self.trials[0].mu.len();
        let mut out: Vec<CsvFile> = self
            .trials
            .iter()
            .enumerate()
            .map(|(i, t)| trajectory_csv(&format!("trial_{i}.csv"), &t.run.trajectory))
            .collect();
        let mut s = CsvFile::new("summary.csv", fig4_summary_header(dim));
        for (i, t) in self.trials.iter().enumerate() {
            let e = t.entropy();
            let am = t.argmin();
            let mut row = vec![i.to_string()];
            row.extend(t.mu.iter().map(|m| num(*m)));
            row.extend([
                num(e[0]),
                num(e[am]),
                num(t.run.trajectory.times()[am]),
                num(e[e.len() - 1]),
                num(t.rebound_fraction()),
                (t.interior_min() as u8).to_string(),
            ]);
            s.push(row);
        }
        out.push(s);
        out
    }
}

/// Targets with components uniform on `[lo, hi]`, pairwise at least
/// `gap` apart.
pub fn draw_targets(c: &Fig4Config) -> Vec<Vec<f64>> {
    let mut rng = RngSeed(c.seed).rng();
    (0..c.trials)
        .map(|_| loop {
            let mu: Vec<f64> = (0..c.dim).map(|_| rng.random_range(c.mu_low..c.mu_high)).collect();
            let mut s = mu.clone();
            s.sort_by(f64::total_cmp);
            if s.windows(2).all(|w| w[1] - w[0] > c.min_gap) {
                break mu;
            }
        })
        .collect()
}

pub fn fig4(c: &Fig4Config, exec: Exec) -> Result<Fig4Report, CliError> {
    let targets = draw_targets(c);
    let spec = RunSpec {
        eta: c.eta,
        t_end: c.t_end,
        snapshot_dt: c.snapshot_dt,
        integrator: Integrator::Rk4,
        guard: StepGuard::default(),
    };
    let extra = |s: &ReducedState| vec![attention_entropy_of(&s.v)];
    let runs = exec.map(targets.len(), |i| {
        let mu = &targets[i];
        let v0 = mu.iter().map(|m| c.init_frac * m).collect();
        run_reduced(ReducedState::new(v0), nonlinear_field(mu, true), &spec, &extra, &["entropy"])
    });
    let mut trials = Vec::with_capacity(runs.len());
    for (mu, run) in targets.into_iter().zip(runs) {
        trials.push(EntropyTrial { mu, run: run? });
    }
    Ok(Fig4Report { trials })
}

pub const THM4_SERIES: &[&str] = &["t", "ratio", "progress"];
pub const THM4_SUMMARY: &[&str] = &["mu_0", "mu_1", "predicted", "measured", "rel_err", "t_read"];

pub struct RatioCase {
    pub mu: Vec<f64>,
    pub series: RatioSeries,
    /// Index into the series where the ratio is read, if reached.
    pub read_at: Option<usize>,
}

impl RatioCase {
    pub fn measured(&self) -> f64 {
        self.read_at.map_or(f64::NAN, |i| self.series.ratios[i])
    }

    pub fn rel_err(&self) -> f64 {
        (self.measured() - self.series.target).abs() / self.series.target
    }
}

pub struct Thm4Report {
    pub cases: Vec<RatioCase>,
}

impl Thm4Report {
    pub fn files(&self) -> Vec<CsvFile> {
        let mut out = Vec::new();
        let mut s = CsvFile::with_header("summary.csv", THM4_SUMMARY);
        for (i, c) in self.cases.iter().enumerate() {
            let mut f = CsvFile::with_header(format!("ratio_{i}.csv"), THM4_SERIES);
            for j in 0..c.series.times.len() {
                f.push_nums(&[c.series.times[j], c.series.ratios[j], c.series.progress[j]]);
            }
            out.push(f);
            s.push_nums(&[
                c.mu[0],
                c.mu[1],
                c.series.target,
                c.measured(),
                c.rel_err(),
                c.read_at.map_or(f64::NAN, |j| c.series.times[j]),
            ]);
        }
        out.push(s);
        out
    }
}

pub fn thm4(c: &Thm4Config) -> Result<Thm4Report, CliError> {
    let spec = RunSpec {
        eta: c.eta,
        t_end: c.t_end,
        snapshot_dt: c.snapshot_dt,
        integrator: Integrator::Rk4,
        guard: StepGuard::default(),
    };
    let mut cases = Vec::new();
    for mu in &c.targets {
        let v0 = mu.iter().map(|m| c.init_frac * m).collect();
        let run = run_reduced(ReducedState::new(v0), nonlinear_field(mu, true), &spec, &|_| vec![], &[])?;
        let vs: Vec<Vec<f64>> = run.trajectory.rows().to_vec();
        let series = convergence_ratio(run.trajectory.times(), &vs, mu, 0, 1)?;
        let read_at = series.progress.iter().position(|p| *p <= c.progress);
        cases.push(RatioCase {
            mu: mu.clone(),
            series,
            read_at,
        });
    }
    Ok(Thm4Report { cases })
}

impl AttentionName {
    pub fn as_str(self) -> &'static str {
        match self {
            AttentionName::Linear => "linear",
            AttentionName::Exp => "exp",
            AttentionName::Softmax => "softmax",
        }
    }
}
