//! The 2×2 conditional `M(ρ) = ½[[1+ρ, 1−ρ], [1−ρ, 1+ρ]]`, indexed
//! `[child][parent]` with state 0 first, and `p(ρ) = ½[1+ρ, 1−ρ]`.

use crate::{HbltError, Result};

pub type Mat2 = [[f64; 2]; 2];

fn check(rho: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(HbltError::Domain(rho))
    }
}

pub fn m_matrix(rho: f64) -> Result<Mat2> {
    check(rho)?;
    let (a, b) = (0.5 * (1.0 + rho), 0.5 * (1.0 - rho));
    Ok([[a, b], [b, a]])
}

pub fn p_vec(rho: f64) -> Result<[f64; 2]> {
    check(rho)?;
    Ok([0.5 * (1.0 + rho), 0.5 * (1.0 - rho)])
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_one() {
        assert_eq!(m_matrix(1.0).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);
        assert!(m_matrix(1.5).is_err());
        assert!(p_vec(-1.01).is_err());
    }
}
