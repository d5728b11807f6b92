//! Error function and the two Gaussian-integral helpers used in the
//! attention-sparsity bounds.

use crate::quad::{integrate, Domain, QuadratureSpec};
use crate::{NumError, Result};
use std::f64::consts::PI;

/// Gauss error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// Inverse of [`erf`] on the open interval (-1, 1).
///
/// The statrs estimate is polished with Halley steps so that
/// `erf(erf_inv(y))` reproduces `y` to rounding.
pub fn erf_inv(y: f64) -> Result<f64> {
    if !y.is_finite() || y.abs() >= 1.0 {
        return Err(NumError::Domain(format!("erf_inv requires |y| < 1, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut x = statrs::function::erf::erf_inv(y);
    let scale = 2.0 / PI.sqrt();
    for _ in 0..4 {
        let f = erf(x) - y;
        if f == 0.0 {
            break;
        }
        let d = scale * (-x * x).exp();
        if d == 0.0 {
            break;
        }
        // Halley: f'' = -2x f'
        let step = f / (d + x * f);
        x -= step;
        if step.abs() <= 1e-17 * x.abs().max(1e-300) {
            break;
        }
    }
    Ok(x)
}

/// g(y) = (1 - exp(-y^2)) / y, with g(0) = 0.
pub fn g_func(y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(NumError::Domain(format!("g requires finite y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    Ok(-(-y * y).exp_m1() / y)
}

/// G(y) = exp(-y^2/2) * int_0^y exp(x^2/2) dx.
///
/// The exponentials are folded into one integrand so large `y` never
/// overflows.
#[allow(non_snake_case)]
pub fn G_func(y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(NumError::Domain(format!("G requires finite y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let spec = QuadratureSpec {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        ..QuadratureSpec::default()
    };
    // The integrand is concentrated within ~10/y of the upper end.
    let knee = (y - 40.0 / y).max(0.0);
    let head = if knee > 0.0 {
        integrate(|x| (0.5 * (x - y) * (x + y)).exp(), Domain::Interval(0.0, knee), &spec)?
    } else {
        0.0
    };
    let tail = integrate(|x| (0.5 * (x - y) * (x + y)).exp(), Domain::Interval(knee, y), &spec)?;
    Ok(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erf_reference_points() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-14);
        assert!((erf(-0.5) + 0.520_499_877_813_046_5).abs() < 1e-14);
    }

    #[test]
    fn erf_inv_domain() {
        assert!(erf_inv(1.0).is_err());
        assert!(erf_inv(-1.0).is_err());
        assert!(erf_inv(f64::NAN).is_err());
        assert_eq!(erf_inv(0.0).unwrap(), 0.0);
    }

    #[test]
    fn g_at_zero_and_small() {
        assert_eq!(g_func(0.0).unwrap(), 0.0);
        // g(y) ~ y for small y
        assert!((g_func(1e-8).unwrap() - 1e-8).abs() < 1e-20);
        assert!(g_func(-1.0).is_err());
    }

    #[test]
    fn big_g_small_argument() {
        // G(y) = y - y^3/3 + ... near zero
        let y = 1e-3;
        assert!((G_func(y).unwrap() - (y - y.powi(3) / 3.0)).abs() < 1e-14);
    }
}
