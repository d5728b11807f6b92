//! Forward-Euler integration of the joint logit/weight dynamics under
//! stationary back-propagated gradients and linear MLP activation.

use crate::attention::{attention_reweight, AttentionKind};
use crate::trajectory::Trajectory;
use crate::{DynError, Result};
use joma_num::Matrix;

/// Stationary gradient statistics for a mixture of C input classes.
#[derive(Debug, Clone, PartialEq)]
pub struct GradStats {
    /// Class-conditional token frequencies, C rows of length M.
    centers: Vec<Vec<f64>>,
    /// `a[c][k] = E[g_{h_k} | c] P[c]`
    coeffs: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl GradStats {
    pub fn new(centers: Vec<Vec<f64>>, coeffs: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let c = centers.len();
        if c == 0 || coeffs.len() != c || probs.len() != c {
            return Err(DynError::Dimension("centers, coeffs and probs need one entry per class".into()));
        }
        let m = centers[0].len();
        let k = coeffs[0].len();
        if m == 0 || k == 0 {
            return Err(DynError::Dimension("empty token or node dimension".into()));
        }
        if centers.iter().any(|x| x.len() != m) || coeffs.iter().any(|a| a.len() != k) {
            return Err(DynError::Dimension("ragged centers or coeffs".into()));
        }
        if centers.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(DynError::Invalid("centers must be finite and nonnegative".into()));
        }
        if coeffs.iter().flatten().any(|v| !v.is_finite()) {
            return Err(DynError::Invalid("coefficients must be finite".into()));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(DynError::Invalid("class probabilities must form a distribution".into()));
        }
        Ok(Self { centers, coeffs, probs })
    }

    pub fn tokens(&self) -> usize {
        self.centers[0].len()
    }

    pub fn nodes(&self) -> usize {
        self.coeffs[0].len()
    }

    pub fn classes(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `Δ[l][k] = E[g_{h_k} x_l]`, as an M×K matrix.
    pub fn delta(&self) -> Matrix {
        let (m, k) = (self.tokens(), self.nodes());
        Matrix::from_fn(m, k, |l, j| {
            self.centers
                .iter()
                .zip(&self.coeffs)
                .map(|(x, a)| a[j] * x[l])
                .sum()
        })
        .expect("finite inputs give a finite delta")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    /// K columns `v_k = U_C^T w_k`, each of length M.
    pub v: Vec<Vec<f64>>,
    /// Implicit biases `u_m^T w_k`.
    pub xi: Vec<f64>,
    /// Attention logits for the query.
    pub z: Vec<f64>,
    pub step: u64,
    /// Running mean over steps of the class-averaged attention.
    pub bbar: Vec<f64>,
}

impl CoupledState {
    pub fn zeros(m: usize, k: usize) -> Self {
        Self::with_logits(vec![0.0; m], k)
    }

    pub fn with_logits(z: Vec<f64>, k: usize) -> Self {
        let m = z.len();
        Self {
            v: vec![vec![0.0; m]; k],
            xi: vec![0.0; k],
            z,
            step: 0,
            bbar: vec![0.0; m],
        }
    }

    fn check(&self, stats: &GradStats) -> Result<()> {
        let (m, k) = (stats.tokens(), stats.nodes());
        if self.z.len() != m || self.bbar.len() != m || self.v.len() != k || self.xi.len() != k {
            return Err(DynError::Dimension("state does not match gradient statistics".into()));
        }
        if self.v.iter().any(|c| c.len() != m) {
            return Err(DynError::Dimension("state columns have wrong length".into()));
        }
        Ok(())
    }

    fn sum_sq(&self) -> Vec<f64> {
        let m = self.z.len();
        (0..m).map(|l| self.v.iter().map(|c| c[l] * c[l]).sum()).collect()
    }
}

/// One forward-Euler step of size `eta`.
pub fn coupled_step(state: &CoupledState, stats: &GradStats, kind: AttentionKind, eta: f64) -> Result<CoupledState> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(DynError::Invalid(format!("step size must be positive, got {eta}")));
    }
    state.check(stats)?;
    let (m, k) = (stats.tokens(), stats.nodes());
    let bs: Vec<Vec<f64>> = stats
        .centers
        .iter()
        .map(|x| attention_reweight(&state.z, x, kind))
        .collect::<Result<_>>()?;

    let mut vdot = vec![vec![0.0; m]; k];
    let mut xidot = vec![0.0; k];
    for (b, a) in bs.iter().zip(&stats.coeffs) {
        for j in 0..k {
            xidot[j] += a[j];
            for l in 0..m {
                vdot[j][l] += a[j] * b[l];
            }
        }
    }

    let mut zdot = vec![0.0; m];
    match kind {
        AttentionKind::Linear => {
            // db/dz = diag(x)
            for (x, a) in stats.centers.iter().zip(&stats.coeffs) {
                for j in 0..k {
                    for l in 0..m {
                        zdot[l] += a[j] * x[l] * state.v[j][l];
                    }
                }
            }
        }
        AttentionKind::Exp { .. } => {
            // db/dz = diag(b)
            for j in 0..k {
                for l in 0..m {
                    zdot[l] += vdot[j][l] * state.v[j][l];
                }
            }
        }
        AttentionKind::Softmax => {
            // db/dz = diag(b) - b b^T
            for (b, a) in bs.iter().zip(&stats.coeffs) {
                for j in 0..k {
                    let proj: f64 = b.iter().zip(&state.v[j]).map(|(b, v)| b * v).sum();
                    for l in 0..m {
                        zdot[l] += a[j] * b[l] * (state.v[j][l] - proj);
                    }
                }
            }
        }
    }

    let n = state.step as f64;
    let mut next = state.clone();
    for l in 0..m {
        let mean_b: f64 = bs.iter().zip(&stats.probs).map(|(b, p)| p * b[l]).sum();
        next.bbar[l] = (state.bbar[l] * n + mean_b) / (n + 1.0);
        next.z[l] += eta * zdot[l];
    }
    for j in 0..k {
        next.xi[j] += eta * xidot[j];
        for l in 0..m {
            next.v[j][l] += eta * vdot[j][l];
        }
    }
    next.step += 1;
    let t = next.step as f64 * eta;
    if next.z.iter().chain(next.v.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(DynError::NonFinite { t });
    }
    Ok(next)
}

/// The constant `c` of the first integral, fixed by the initial state.
pub fn invariant_constant(initial: &CoupledState, kind: AttentionKind) -> Vec<f64> {
    let s = initial.sum_sq();
    let sq: Vec<f64> = initial.v.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    initial
        .z
        .iter()
        .enumerate()
        .map(|(l, z)| match kind {
            AttentionKind::Linear => z * z - s[l],
            AttentionKind::Exp { .. } => z - 0.5 * s[l],
            AttentionKind::Softmax => {
                z - 0.5 * s[l] + 0.5 * sq.iter().sum::<f64>() * initial.bbar[l]
            }
        })
        .collect()
}

/// Logits predicted from the weights alone.
///
/// For linear attention the sign of each entry is copied from the
/// integrated logits, since the invariant fixes only `z²`.
pub fn invariant_estimate(state: &CoupledState, kind: AttentionKind, c: &[f64]) -> Vec<f64> {
    let s = state.sum_sq();
    let norms_sq: f64 = state.v.iter().flatten().map(|v| v * v).sum();
    (0..state.z.len())
        .map(|l| match kind {
            AttentionKind::Linear => {
                let mag = (s[l] + c[l]).max(0.0).sqrt();
                if state.z[l] < 0.0 {
                    -mag
                } else {
                    mag
                }
            }
            AttentionKind::Exp { .. } => 0.5 * s[l] + c[l],
            AttentionKind::Softmax => 0.5 * s[l] - 0.5 * norms_sq * state.bbar[l] + c[l],
        })
        .collect()
}

/// Max-abs violation of the first integral. Exact for the exp and linear
/// forms; the softmax relation uses the running mean `b̄` and is only
/// approximate. Linear attention is measured on the squared form
/// `z² - Σ v² - c`.
pub fn invariant_residual(state: &CoupledState, kind: AttentionKind, c: &[f64]) -> f64 {
    match kind {
        AttentionKind::Linear => {
            let s = state.sum_sq();
            state
                .z
                .iter()
                .zip(s.iter().zip(c))
                .map(|(z, (s, c))| (z * z - s - c).abs())
                .fold(0.0, f64::max)
        }
        _ => {
            let zhat = invariant_estimate(state, kind, c);
            state
                .z
                .iter()
                .zip(&zhat)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub trajectory: Trajectory,
    pub initial: CoupledState,
    pub last: CoupledState,
    pub constant: Vec<f64>,
}

impl CoupledRun {
    pub fn terminal_residual(&self, kind: AttentionKind) -> f64 {
        invariant_residual(&self.last, kind, &self.constant)
    }
}

/// Integrates `steps` Euler steps, recording a snapshot every `stride`
/// steps and at the end. Columns: `z_l`, `zhat_l`, `v_l_k`, `residual`.
pub fn run_coupled(
    initial: CoupledState,
    stats: &GradStats,
    kind: AttentionKind,
    eta: f64,
    steps: u64,
    stride: u64,
) -> Result<CoupledRun> {
    if stride == 0 {
        return Err(DynError::Invalid("stride must be >= 1".into()));
    }
    initial.check(stats)?;
    let (m, k) = (stats.tokens(), stats.nodes());
    let mut cols: Vec<String> = (0..m).map(|l| format!("z_{l}")).collect();
    cols.extend((0..m).map(|l| format!("zhat_{l}")));
    for j in 0..k {
        cols.extend((0..m).map(|l| format!("v_{l}_{j}")));
    }
    cols.push("residual".into());
    let mut traj = Trajectory::new(cols);
    let constant = invariant_constant(&initial, kind);

    let record = |traj: &mut Trajectory, s: &CoupledState| -> Result<()> {
        let mut row = s.z.clone();
        row.extend(invariant_estimate(s, kind, &constant));
        row.extend(s.v.iter().flatten().copied());
        row.push(invariant_residual(s, kind, &constant));
        traj.push(s.step as f64 * eta, row)
    };

    record(&mut traj, &initial)?;
    let mut state = initial.clone();
    for _ in 0..steps {
        state = coupled_step(&state, stats, kind, eta)?;
        if state.step % stride == 0 {
            record(&mut traj, &state)?;
        }
    }
    if state.step % stride != 0 {
        record(&mut traj, &state)?;
    }
    Ok(CoupledRun {
        trajectory: traj,
        initial,
        last: state,
        constant,
    })
}
