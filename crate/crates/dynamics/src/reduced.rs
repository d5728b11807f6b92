//! Single-node dynamics after eliminating the attention logits:
//! `v̇ = Δ ∘ exp(v²/2)` (linear activation) and the projected nonlinear
//! form `v̇ = (μ - v) ∘ exp(v²/2)`.

use crate::trajectory::Trajectory;
use crate::{DynError, Result};
use joma_num::{entropy, erf, softmax};
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub v: Vec<f64>,
    pub xi: f64,
    pub t: f64,
}

impl ReducedState {
    pub fn new(v: Vec<f64>) -> Self {
        Self { v, xi: 0.0, t: 0.0 }
    }
}

/// Step acceptance rules. A step is halved while it would take any
/// `|v_l|` past `cap`, change any component by more than
/// `max_increment`, or produce a non-finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepGuard {
    pub cap: f64,
    pub max_increment: f64,
}

impl Default for StepGuard {
    fn default() -> Self {
        Self {
            cap: 30.0,
            max_increment: f64::INFINITY,
        }
    }
}

fn integrate_once<F: Fn(&[f64]) -> Vec<f64>>(v: &[f64], f: &F, dt: f64, integ: Integrator) -> Vec<f64> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + s * b).collect() };
    match integ {
        Integrator::Euler => axpy(v, dt, &f(v)),
        Integrator::Rk4 => {
            let k1 = f(v);
            let k2 = f(&axpy(v, dt / 2.0, &k1));
            let k3 = f(&axpy(v, dt / 2.0, &k2));
            let k4 = f(&axpy(v, dt, &k3));
            v.iter()
                .enumerate()
                .map(|(i, x)| x + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
    }
}

/// Advances `state` by at most `eta`, halving until the guard accepts.
/// Returns the new state; its `t` records the step actually taken.
pub fn guarded_step<F: Fn(&[f64]) -> Vec<f64>>(
    state: &ReducedState,
    f: F,
    eta: f64,
    integ: Integrator,
    guard: StepGuard,
) -> Result<ReducedState> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DynError::Invalid(format!("step size must be positive, got {eta}")));
    }
    let mut dt = eta;
    while dt > 0.0 {
        let next = integrate_once(&state.v, &f, dt, integ);
        let ok = next.iter().zip(&state.v).all(|(n, o)| {
            n.is_finite() && n.abs() <= guard.cap && (n - o).abs() <= guard.max_increment
        });
        if ok {
            return Ok(ReducedState {
                v: next,
                xi: state.xi,
                t: state.t + dt,
            });
        }
        dt *= 0.5;
    }
    Err(DynError::Overflow { t: state.t })
}

pub fn linear_field(delta: &[f64]) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |v: &[f64]| v.iter().zip(delta).map(|(v, d)| d * (0.5 * v * v).exp()).collect()
}

pub fn nonlinear_field(mu: &[f64], with_attention: bool) -> impl Fn(&[f64]) -> Vec<f64> + '_ {
    move |v: &[f64]| {
        v.iter()
            .zip(mu)
            .map(|(v, m)| {
                let gate = if with_attention { (0.5 * v * v).exp() } else { 1.0 };
                (m - v) * gate
            })
            .collect()
    }
}

pub fn reduced_linear_step(
    state: &ReducedState,
    delta: &[f64],
    eta: f64,
    integ: Integrator,
    guard: StepGuard,
) -> Result<ReducedState> {
    if delta.len() != state.v.len() {
        return Err(DynError::Dimension("delta and v differ in length".into()));
    }
    guarded_step(state, linear_field(delta), eta, integ, guard)
}

pub fn reduced_nonlinear_step(
    state: &ReducedState,
    mu: &[f64],
    eta: f64,
    with_attention: bool,
    integ: Integrator,
    guard: StepGuard,
) -> Result<ReducedState> {
    if mu.len() != state.v.len() {
        return Err(DynError::Dimension("mu and v differ in length".into()));
    }
    guarded_step(state, nonlinear_field(mu, with_attention), eta, integ, guard)
}

/// Largest pairwise gap of `erf(v_l / scale) / Δ_l`.
///
/// The flow `v̇ = Δ ∘ exp(v²/2)` conserves these ratios exactly for
/// `scale = √2`; other scales are accepted so alternative forms can be
/// measured against the same trajectory.
pub fn erf_ratio_residual(v: &[f64], delta: &[f64], scale: f64) -> Result<f64> {
    if v.len() != delta.len() {
        return Err(DynError::Dimension("delta and v differ in length".into()));
    }
    if let Some(i) = delta.iter().position(|d| *d == 0.0) {
        return Err(DynError::ZeroDelta(i));
    }
    let r: Vec<f64> = v.iter().zip(delta).map(|(v, d)| erf(v / scale) / d).collect();
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(hi - lo)
}

pub fn erf_invariant_residual(state: &ReducedState, delta: &[f64]) -> Result<f64> {
    erf_ratio_residual(&state.v, delta, SQRT_2)
}

/// Entropy of `softmax(v²)`.
pub fn attention_entropy_of(v: &[f64]) -> f64 {
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    entropy(&softmax(&sq)).expect("softmax output is a distribution")
}

#[derive(Debug, Clone)]
pub struct ReducedRun {
    pub trajectory: Trajectory,
    pub last: ReducedState,
    /// The run ended because no admissible step remained under the cap.
    pub capped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub eta: f64,
    pub t_end: f64,
    pub snapshot_dt: f64,
    pub integrator: Integrator,
    pub guard: StepGuard,
}

/// Integrates until `t_end` or until the cap stops progress, snapshotting
/// at every multiple of `snapshot_dt` and at the end. `extra` appends
/// derived columns named by `extra_names`.
pub fn run_reduced<F: Fn(&[f64]) -> Vec<f64>>(
    initial: ReducedState,
    field: F,
    spec: &RunSpec,
    extra: &dyn Fn(&ReducedState) -> Vec<f64>,
    extra_names: &[&str],
) -> Result<ReducedRun> {
    if !(spec.snapshot_dt > 0.0) {
        return Err(DynError::Invalid("snapshot interval must be positive".into()));
    }
    let n = initial.v.len();
    let mut cols: Vec<String> = (0..n).map(|l| format!("v_{l}")).collect();
    cols.extend(extra_names.iter().map(|s| s.to_string()));
    let mut traj = Trajectory::new(cols);
    let row = |s: &ReducedState| {
        let mut r = s.v.clone();
        r.extend(extra(s));
        r
    };
    traj.push(initial.t, row(&initial))?;
    let mut state = initial;
    let mut next_snap = state.t + spec.snapshot_dt;
    let mut capped = false;
    let near_cap = |s: &ReducedState| s.v.iter().any(|v| v.abs() >= spec.guard.cap * (1.0 - 1e-9));
    while state.t < spec.t_end {
        let remaining = (spec.t_end - state.t).min(next_snap - state.t);
        let step = if remaining > 0.0 { spec.eta.min(remaining) } else { spec.eta };
        match guarded_step(&state, &field, step, spec.integrator, spec.guard) {
            Ok(s) => state = s,
            Err(DynError::Overflow { .. }) => {
                capped = true;
                break;
            }
            Err(e) => return Err(e),
        }
        if near_cap(&state) {
            capped = true;
            break;
        }
        if state.t >= next_snap * (1.0 - 1e-12) {
            traj.push(state.t, row(&state))?;
            while next_snap <= state.t * (1.0 + 1e-12) {
                next_snap += spec.snapshot_dt;
            }
        }
    }
    traj.push_or_replace_last(state.t, row(&state))?;
    Ok(ReducedRun {
        trajectory: traj,
        last: state,
        capped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub times: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `δ_k(t) / δ_k(0)` at each entry.
    pub progress: Vec<f64>,
    pub target: f64,
    /// The series stopped early because a deficit reached zero.
    pub truncated: bool,
}

/// `ln(δ_j(0)/δ_j(t)) / ln(δ_k(0)/δ_k(t))` along a trajectory of `v`,
/// with `δ_i = 1 - v_i/μ_i`.
pub fn convergence_ratio(times: &[f64], vs: &[Vec<f64>], mu: &[f64], j: usize, k: usize) -> Result<RatioSeries> {
    if mu[j] == 0.0 || mu[k] == 0.0 {
        return Err(DynError::Invalid("target components must be nonzero".into()));
    }
    let deficit = |v: &[f64], i: usize| 1.0 - v[i] / mu[i];
    let (dj0, dk0) = (deficit(&vs[0], j), deficit(&vs[0], k));
    if dj0 == 0.0 || dk0 == 0.0 {
        return Err(DynError::Invalid("initial deficit must be nonzero".into()));
    }
    let target = (0.5 * (mu[j] * mu[j] - mu[k] * mu[k])).exp();
    let mut out = RatioSeries {
        times: Vec::new(),
        ratios: Vec::new(),
        progress: Vec::new(),
        target,
        truncated: false,
    };
    for (t, v) in times.iter().zip(vs).skip(1) {
        let (dj, dk) = (deficit(v, j), deficit(v, k));
        if dj / dj0 <= 0.0 || dk / dk0 <= 0.0 {
            out.truncated = true;
            break;
        }
        let den = (dk0 / dk).ln();
        if den == 0.0 {
            continue;
        }
        out.times.push(*t);
        out.ratios.push((dj0 / dj).ln() / den);
        out.progress.push(dk / dk0);
    }
    Ok(out)
}
