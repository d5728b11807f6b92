//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use crate::{NumError, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Infinite ends are replaced by `±r_max`.
    pub r_max: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 2000,
            r_max: 12.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.r_max > 0.0) {
            return Err(NumError::Domain(
                "quadrature tolerances and r_max must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(NumError::Domain("max_subdivisions must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval(f64, f64),
    /// (-inf, inf)
    FullLine,
    /// [a, inf)
    Above(f64),
    /// (-inf, b]
    Below(f64),
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Piece> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(NumError::NonFinite("integrand"));
    }
    let mut kr = WGK[7] * fc;
    let mut ga = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(NumError::NonFinite("integrand"));
        }
        kr += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            ga += WG[i / 2] * (f1 + f2);
        }
    }
    Ok(Piece {
        a,
        b,
        value: kr * h,
        error: ((kr - ga) * h).abs(),
    })
}

/// Integrates `f` over `domain`; infinite ends are truncated at `spec.r_max`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, domain: Domain, spec: &QuadratureSpec) -> Result<f64> {
    let (a, b) = match domain {
        Domain::Interval(a, b) => (a, b),
        Domain::FullLine => (-spec.r_max, spec.r_max),
        Domain::Above(a) => (a, a.max(0.0) + spec.r_max),
        Domain::Below(b) => (b.min(0.0) - spec.r_max, b),
    };
    integrate_pieces(f, &[a, b], spec)
}

/// Integrates over `[points[0], points.last()]`, starting from the given
/// subdivision. Interior points are where the integrand has kinks or jumps.
pub fn integrate_pieces<F: Fn(f64) -> f64>(f: F, points: &[f64], spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    if points.len() < 2 {
        return Err(NumError::Domain("need at least two points".into()));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(NumError::Domain("integration limits must be finite".into()));
    }
    let (lo, hi) = (points[0], points[points.len() - 1]);
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        let rev: Vec<f64> = points.iter().rev().copied().collect();
        return integrate_pieces(f, &rev, spec).map(|v| -v);
    }
    let mut heap = BinaryHeap::new();
    let mut prev = lo;
    for &p in &points[1..] {
        let p = p.clamp(prev, hi);
        if p > prev {
            heap.push(kronrod(&f, prev, p)?);
            prev = p;
        }
    }
    let mut count = heap.len();
    loop {
        let (value, error) = heap
            .iter()
            .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(value);
        }
        if count >= spec.max_subdivisions {
            return Err(NumError::NonConvergence {
                intervals: count,
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(NumError::NonConvergence {
                intervals: count,
                estimate: value,
                error,
            });
        }
        heap.push(kronrod(&f, worst.a, mid)?);
        heap.push(kronrod(&f, mid, worst.b)?);
        count += 1;
    }
}
