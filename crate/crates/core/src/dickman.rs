//! Dickman's function ρ(u), the solution of `u ρ'(u) + ρ(u − 1) = 0` with
//! `ρ = 1` on `[0, 1]`.

use std::sync::OnceLock;

use crate::error::{FriaError, Result};

const STEPS_PER_UNIT: usize = 256;
const H: f64 = 1.0 / STEPS_PER_UNIT as f64;
const CACHED_UNITS: usize = 64;

fn closed_form(u: f64) -> f64 {
    if u <= 1.0 {
        1.0
    } else {
        1.0 - u.ln()
    }
}

/// Cubic Lagrange interpolation of grid values, with the stencil kept inside
/// the unit interval that contains `t`.
fn interpolate(table: &[f64], t: f64) -> f64 {
    let pos = t / H;
    let unit = (t.floor() as usize).min(table.len() / STEPS_PER_UNIT);
    let lo = unit * STEPS_PER_UNIT;
    let hi = (lo + STEPS_PER_UNIT).min(table.len() - 1);
    let i0 = ((pos.floor() as usize).saturating_sub(1)).clamp(lo, hi - 3);
    let nodes = [i0, i0 + 1, i0 + 2, i0 + 3];
    let mut acc = 0.0;
    for (j, &nj) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (m, &nm) in nodes.iter().enumerate() {
            if m != j {
                w *= (pos - nm as f64) / (nj as f64 - nm as f64);
            }
        }
        acc += w * table[nj];
    }
    acc
}

fn lagged(table: &[f64], t: f64) -> f64 {
    if t <= 2.0 {
        closed_form(t)
    } else {
        interpolate(table, t)
    }
}

fn build_table(units: usize) -> Vec<f64> {
    let n = units * STEPS_PER_UNIT;
    let mut table = Vec::with_capacity(n + 1);
    for i in 0..=2 * STEPS_PER_UNIT {
        table.push(closed_form(i as f64 * H));
    }
    let rhs = |table: &[f64], u: f64| -lagged(table, u - 1.0) / u;
    for i in 2 * STEPS_PER_UNIT..n {
        let u = i as f64 * H;
        let r = table[i];
        // The right-hand side does not depend on ρ(u), so the RK4 stages
        // collapse to Simpson's rule on [u, u + h].
        let k1 = rhs(&table, u);
        let k2 = rhs(&table, u + 0.5 * H);
        let k4 = rhs(&table, u + H);
        table.push(r + H / 6.0 * (k1 + 4.0 * k2 + k4));
    }
    table
}

fn cached_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| build_table(CACHED_UNITS))
}

/// ρ(u) for `u ≥ 0`.
pub fn dickman_rho(u: f64) -> Result<f64> {
    if !(u >= 0.0) || !u.is_finite() {
        return Err(FriaError::domain(format!("dickman_rho needs finite u >= 0, got {u}")));
    }
    if u <= 2.0 {
        return Ok(closed_form(u));
    }
    let table = cached_table();
    if u < CACHED_UNITS as f64 - 1.0 {
        return Ok(interpolate(table, u));
    }
    let big = build_table(u.ceil() as usize + 2);
    Ok(interpolate(&big, u))
}
