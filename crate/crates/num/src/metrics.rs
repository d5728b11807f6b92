//! Distribution and matrix summaries: entropy, stable rank, column
//! cosine similarity.

use crate::matrix::{dot, norm, Matrix};
use crate::{NumError, Result};

const SUM_TOL: f64 = 1e-8;

/// Shannon entropy in nats. Entries must be nonnegative and sum to 1.
pub fn entropy(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(NumError::InvalidDistribution("empty vector".into()));
    }
    if let Some(bad) = p.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(NumError::InvalidDistribution(format!("entry {bad}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(NumError::InvalidDistribution(format!("sums to {total}")));
    }
    let h: f64 = p
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .sum();
    Ok(h.clamp(0.0, (p.len() as f64).ln()))
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Largest singular value, by power iteration on `W^T W`.
pub fn spectral_norm(w: &Matrix) -> Result<f64> {
    let n = w.cols();
    if w.frobenius_sq() == 0.0 {
        return Err(NumError::ZeroMatrix);
    }
    // All-ones first; the second start only matters if the first lies in
    // the null space.
    let starts: [fn(usize) -> f64; 2] = [|_| 1.0, |i| if i % 2 == 0 { 1.0 } else { -0.5 - (i % 5) as f64 }];
    for start in starts {
        let mut x: Vec<f64> = (0..n).map(start).collect();
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let mut lambda = 0.0;
        let mut collapsed = false;
        for _ in 0..100_000 {
            let y = w.tmul_vec(&w.mul_vec(&x));
            let ny = norm(&y);
            if ny == 0.0 {
                collapsed = true;
                break;
            }
            lambda = dot(&x, &y);
            let resid: f64 = y
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - lambda * b).powi(2))
                .sum::<f64>()
                .sqrt();
            x = y.into_iter().map(|v| v / ny).collect();
            if resid <= 1e-10 * lambda {
                break;
            }
        }
        if !collapsed {
            return Ok(lambda.sqrt());
        }
    }
    // Both starts orthogonal to the row space: fall back to the largest row.
    let best = (0..w.rows())
        .map(|r| norm(w.row(r)))
        .fold(0.0, f64::max);
    Ok(best)
}

/// ‖W‖_F² / σ_max(W)².
pub fn stable_rank(w: &Matrix) -> Result<f64> {
    let s = spectral_norm(w)?;
    let r = w.frobenius_sq() / (s * s);
    Ok(r.clamp(1.0, w.rows().min(w.cols()) as f64))
}

/// Mean of |cos| over all unordered pairs of columns.
pub fn mean_abs_cossim(w: &Matrix) -> Result<f64> {
    let n = w.cols();
    if n < 2 {
        return Err(NumError::Dimension("need at least two columns".into()));
    }
    let t = w.transpose();
    let norms: Vec<f64> = (0..n).map(|c| norm(t.row(c))).collect();
    if let Some(c) = norms.iter().position(|&v| v == 0.0) {
        return Err(NumError::ZeroColumn(c));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += (dot(t.row(i), t.row(j)) / (norms[i] * norms[j])).abs().min(1.0);
        }
    }
    Ok(total / (n * (n - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_rejects_bad_input() {
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[-0.1, 1.1]).is_err());
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn stable_rank_zero_matrix() {
        assert_eq!(stable_rank(&Matrix::zeros(3, 2)), Err(NumError::ZeroMatrix));
    }

    #[test]
    fn spectral_norm_when_ones_start_is_orthogonal() {
        // The all-ones start vector lies in the null space of this matrix.
        let w = Matrix::new(1, 2, vec![1.0, -1.0]).unwrap();
        assert!((spectral_norm(&w).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cossim_zero_column() {
        let w = Matrix::new(2, 2, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(mean_abs_cossim(&w), Err(NumError::ZeroColumn(1)));
    }
}
