//! Taylor coefficients `d_{k,ℓ}` of Ξ(a, b) at the origin by discrete Cauchy
//! integrals on a torus.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::xi_big;
use crate::error::{FriaError, Result};

const SAMPLES: usize = 64;
const RADIUS: f64 = 0.5;
const CHECK_RADIUS: f64 = 0.25;
const MAX_ORDER: usize = 10;
const MAX_ERROR: f64 = 1e-6;

/// `d[k][ℓ]` for `k + ℓ ≤ order`; `d[0][0] = Ξ(0, 0) = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct XiCoeffTable {
    pub order: usize,
    pub d: Vec<Vec<f64>>,
    pub extraction_error: f64,
}

impl XiCoeffTable {
    pub fn get(&self, k: usize, l: usize) -> Option<f64> {
        self.d.get(k).and_then(|row| row.get(l)).copied()
    }
}

fn torus_coeffs(order: usize, r: f64) -> Result<Vec<Vec<Complex64>>> {
    let n = SAMPLES;
    let roots: Vec<Complex64> = (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect();
    let mut grid = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (j, row) in grid.iter_mut().enumerate() {
        for (m, cell) in row.iter_mut().enumerate() {
            *cell = xi_big(roots[j] * r, roots[m] * r)?;
        }
    }
    let mut out = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut row = Vec::with_capacity(order + 1 - k);
        for l in 0..=order - k {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, grow) in grid.iter().enumerate() {
                for (m, &val) in grow.iter().enumerate() {
                    acc += val * roots[(n - (k * j) % n) % n] * roots[(n - (l * m) % n) % n];
                }
            }
            row.push(acc / (n * n) as f64 / r.powi((k + l) as i32));
        }
        out.push(row);
    }
    Ok(out)
}

/// Coefficients of `Ξ(a, b) = Σ d_{k,ℓ} a^k b^ℓ` up to total order `order ≤ 10`.
pub fn extract_xi_coeffs(order: usize) -> Result<XiCoeffTable> {
    if order > MAX_ORDER {
        return Err(FriaError::domain(format!("coefficient order {order} exceeds {MAX_ORDER}")));
    }
    let main = torus_coeffs(order, RADIUS)?;
    let check = torus_coeffs(order, CHECK_RADIUS)?;
    let mut err: f64 = 0.0;
    let mut d = Vec::with_capacity(order + 1);
    for (mrow, crow) in main.iter().zip(&check) {
        let mut row = Vec::with_capacity(mrow.len());
        for (m, c) in mrow.iter().zip(crow) {
            err = err.max((m - c).norm()).max(m.im.abs());
            row.push(m.re);
        }
        d.push(row);
    }
    if err > MAX_ERROR {
        return Err(FriaError::numeric("Cauchy extraction of Ξ coefficients is inaccurate", err));
    }
    Ok(XiCoeffTable { order, d, extraction_error: err })
}
