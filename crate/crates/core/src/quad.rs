//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate drops below the absolute tolerance. Integrands are complex-valued;
//! [`integrate_real`] is a thin wrapper for real integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{FriaError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances and limits of the adaptive scheme.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-12, max_intervals: 20_000 }
    }
}

/// Integral value together with the final error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
}

struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Segment {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += pair * wk;
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    Segment { a, b, value, error }
}

/// Integrates a complex-valued `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(FriaError::domain("quadrature limits must be finite"));
    }
    let mut heap = BinaryHeap::new();
    let first = gk15(&f, a, b);
    let mut err = first.error;
    heap.push(first);
    while err > cfg.abs_tol {
        if heap.len() >= cfg.max_intervals {
            return Err(FriaError::numeric(
                format!("adaptive quadrature on [{a}, {b}] exhausted {} intervals", cfg.max_intervals),
                err,
            ));
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval collapsed to adjacent floats; nothing left to refine.
            return Err(FriaError::numeric("quadrature interval collapsed", err));
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum from scratch so the result does not carry update round-off.
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut segs = heap.into_vec();
    segs.sort_by(|l, r| l.a.total_cmp(&r.a));
    for s in &segs {
        value += s.value;
        error += s.error;
    }
    Ok(QuadResult { value, error })
}

/// Integrates a real-valued `f` over `[a, b]`.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: QuadConfig) -> Result<(f64, f64)> {
    let r = integrate(|t| Complex64::new(f(t), 0.0), a, b, cfg)?;
    Ok((r.value.re, r.error))
}
