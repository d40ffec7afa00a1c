//! The Fejér kernel identity and the truncated Perron integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{FriaError, Result};
use crate::quad::{integrate, QuadConfig};

/// `K(τ) = max{0, 1 − |τ|}`.
pub fn fejer_kernel(tau: f64) -> f64 {
    (1.0 - tau.abs()).max(0.0)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FejerPair {
    pub integral: f64,
    pub closed: f64,
    /// Imaginary part left by the quadrature.
    pub imag_residue: f64,
}

/// `∫_{−1}^{1} z^{iτ√T} K(τ) dτ` next to `(sin(c/2)/(c/2))²`, `c = √T log z`.
pub fn fejer_identity(z: f64, t: f64) -> Result<FejerPair> {
    if !(z > 0.0) || !(t >= 2.0) {
        return Err(FriaError::domain(format!("fejer_identity needs z > 0, T >= 2 (z = {z}, T = {t})")));
    }
    let c = t.sqrt() * z.ln();
    let f = |tau: f64| Complex64::new(0.0, c * tau).exp() * fejer_kernel(tau);
    let cfg = QuadConfig::default();
    let left = integrate(f, -1.0, 0.0, cfg)?;
    let right = integrate(f, 0.0, 1.0, cfg)?;
    let v = left.value + right.value;
    let half = 0.5 * c;
    let closed = if half == 0.0 { 1.0 } else { (half.sin() / half).powi(2) };
    Ok(FejerPair { integral: v.re, closed, imag_residue: v.im })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PerronValue {
    pub value: f64,
    pub imag_residue: f64,
    /// `1` if `z > 1`, `1/2` at `z = 1`, else `0`.
    pub indicator: f64,
    /// `z^σ min{1, (T |log z|)^{−1}}`.
    pub bound: f64,
}

/// `(1/2πi) ∫_{σ−iT}^{σ+iT} z^s ds/s` by adaptive quadrature along the line.
pub fn perron_indicator(z: f64, sigma: f64, t: f64) -> Result<PerronValue> {
    if !(z > 0.0) || !(sigma > 0.0) || !(t >= 2.0) {
        return Err(FriaError::domain(format!(
            "perron_indicator needs z > 0, sigma > 0, T >= 2 (z = {z}, sigma = {sigma}, T = {t})"
        )));
    }
    let lz = z.ln();
    let f = |tau: f64| {
        let s = Complex64::new(sigma, tau);
        (s * lz).exp() / s
    };
    // Split at multiples of the oscillation period so each piece is smooth.
    let period = if lz == 0.0 { t } else { (2.0 * PI / lz.abs()).min(t) };
    let pieces = ((2.0 * t / period).ceil() as usize).clamp(1, 4096);
    let width = 2.0 * t / pieces as f64;
    let cfg = QuadConfig { abs_tol: 1e-13, ..QuadConfig::default() };
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..pieces {
        let a = -t + i as f64 * width;
        let b = if i + 1 == pieces { t } else { a + width };
        total += integrate(f, a, b, cfg)?.value;
    }
    let v = total / (2.0 * PI);
    let indicator = if z > 1.0 {
        1.0
    } else if z == 1.0 {
        0.5
    } else {
        0.0
    };
    let bound = z.powf(sigma) * if lz == 0.0 { 1.0 } else { (1.0 / (t * lz.abs())).min(1.0) };
    Ok(PerronValue { value: v.re, imag_residue: v.im, indicator, bound })
}
