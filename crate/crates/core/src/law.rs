//! Limit laws for the divisor statistic D(x, y; v), the corrected
//! predictions, and the comparison engine against exact enumeration.

use std::f64::consts::PI;

use serde::Serialize;

use crate::alpha::{solve_alpha, AlphaState};
use crate::beta::{solve_beta, taylor_bj, v_supremum, BetaConfig, TaylorCoeffs};
use crate::error::{FriaError, Result};
use crate::friable::{primes_up_to, tail_stats};
use crate::quad::{integrate_real, QuadConfig};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const PROP1_NODES: usize = 33;

/// Φ(v) = ∫_v^∞ e^{−z²/2} dz/√(2π).
pub fn gauss_tail(v: f64) -> f64 {
    0.5 * libm::erfc(v / std::f64::consts::SQRT_2)
}

/// `(2/π) arcsin √t`.
pub fn arcsine_law(t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(FriaError::domain(format!("arcsine law needs 0 <= t <= 1, got {t}")));
    }
    Ok(2.0 / PI * t.sqrt().asin())
}

/// Gaussian main term Φ(v).
pub fn predict_thm1(v: f64) -> f64 {
    gauss_tail(v)
}

/// The relative error envelope `(1 + v⁴)/ū` that accompanies Φ(v).
pub fn thm1_envelope(v: f64, u_bar: f64) -> f64 {
    (1.0 + v.powi(4)) / u_bar
}

/// `v_max = ū^{k/(2k+2)}`.
pub fn thm2_v_max(u_bar: f64, k: usize) -> f64 {
    u_bar.powf(k as f64 / (2 * k + 2) as f64)
}

/// `∫_v^{2 v_max} e^{𝓡_k(z)} dz/√(2π)`.
pub fn predict_thm2(coeffs: &TaylorCoeffs, v: f64, v_max: f64) -> Result<f64> {
    if !(v >= 0.0) || !(v_max > 0.0) {
        return Err(FriaError::domain(format!("predict_thm2 needs v >= 0, v_max > 0 (v = {v}, v_max = {v_max})")));
    }
    let cfg = QuadConfig { abs_tol: 1e-12, ..QuadConfig::default() };
    let (val, _) = integrate_real(|z| crate::beta::rk_poly(coeffs, z).exp(), v, 2.0 * v_max, cfg)?;
    Ok(val * INV_SQRT_2PI)
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Pchip {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
            let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
            if s * d0 <= 0.0 {
                0.0
            } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
                3.0 * d0
            } else {
                s
            }
        };
        if n >= 3 {
            m[0] = end(h[0], h[1], delta[0], delta[1]);
            m[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        } else {
            m[0] = delta[0];
            m[n - 1] = delta[0];
        }
        Pchip { x, y, m }
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&xi| xi <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.m[i] + h01 * self.y[i + 1] + h11 * h * self.m[i + 1]
    }
}

/// R(z) on `[0, v_m]` from exact saddle states, ready for quadrature.
#[derive(Debug, Clone)]
pub struct Prop1Model {
    pub v_m: f64,
    pub u_bar: f64,
    interp: Pchip,
}

impl Prop1Model {
    pub fn build(state: &AlphaState, v_m: f64, cfg: &BetaConfig) -> Result<Self> {
        if !(v_m > 0.0) {
            return Err(FriaError::domain(format!("v_m must be positive, got {v_m}")));
        }
        let nodes: Vec<f64> = (0..PROP1_NODES).map(|i| v_m * i as f64 / (PROP1_NODES - 1) as f64).collect();
        let rs = nodes.iter().map(|&z| solve_beta(state, z, cfg).map(|s| s.r)).collect::<Result<Vec<_>>>()?;
        Ok(Prop1Model { v_m, u_bar: state.u_bar, interp: Pchip::new(nodes, rs) })
    }

    /// Interpolated R(z).
    pub fn r(&self, z: f64) -> f64 {
        self.interp.eval(z)
    }

    /// `∫_v^{v_m} e^{h(z)} dz/√(2π)` for an arbitrary exponent `h`.
    pub fn integral_with<F: Fn(f64) -> f64>(&self, v: f64, h: F) -> Result<f64> {
        if !(0.0..=self.v_m).contains(&v) {
            return Err(FriaError::domain(format!("v = {v} outside [0, v_m = {}]", self.v_m)));
        }
        let cfg = QuadConfig { abs_tol: 1e-12, ..QuadConfig::default() };
        let (val, _) = integrate_real(|z| h(z).exp(), v, self.v_m, cfg)?;
        Ok(val * INV_SQRT_2PI)
    }

    pub fn value(&self, v: f64) -> Result<f64> {
        self.integral_with(v, |z| self.r(z))
    }

    /// `e^{R(v_m)}/v_m + e^{R(v)}/ū`.
    pub fn envelope(&self, v: f64) -> f64 {
        self.r(self.v_m).exp() / self.v_m + self.r(v).exp() / self.u_bar
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Prop1Prediction {
    pub value: f64,
    pub envelope: f64,
}

/// `∫_v^{v_m} e^{R(z)} dz/√(2π)` with R from exact saddle states.
pub fn predict_prop1(state: &AlphaState, v: f64, v_m: f64, cfg: &BetaConfig) -> Result<Prop1Prediction> {
    let model = Prop1Model::build(state, v_m, cfg)?;
    Ok(Prop1Prediction { value: model.value(v)?, envelope: model.envelope(v) })
}

/// One line of the exact-versus-predicted comparison.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ComparisonRow {
    pub x: f64,
    pub y: f64,
    pub u_bar: f64,
    pub v: f64,
    pub gamma: f64,
    pub psi: u64,
    pub d_exact: f64,
    pub ambiguous: u64,
    pub phi_v: f64,
    pub thm1_envelope: f64,
    pub thm2_pred: f64,
    pub prop1_pred: f64,
    pub prop1_envelope: f64,
    /// |D − Φ(v)|.
    pub err_gauss: f64,
    /// |D/Φ(v) − 1|.
    pub rel_err_gauss: f64,
    /// |D − thm2_pred|.
    pub err_corrected: f64,
    /// |D − prop1_pred|.
    pub err_prop1: f64,
    /// |D − Φ(v)| ū/(1 + v⁴).
    pub normalized_err: f64,
}

/// Knobs for [`compare_with`].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompareOptions {
    pub k: usize,
    /// Used for the Taylor fit of 𝓡_k.
    pub taylor_beta: BetaConfig,
    /// Used for the exact-R prediction, whose nodes reach well past v_range.
    pub prop1_beta: BetaConfig,
    /// Upper limit for the exact-R integral; defaults to
    /// `min(2 v_max, 0.95 (log x)/(2ϱ))`.
    pub v_m: Option<f64>,
}

impl CompareOptions {
    pub fn new(k: usize) -> Self {
        CompareOptions {
            k,
            taylor_beta: BetaConfig::default(),
            prop1_beta: BetaConfig { ceiling: 64.0, ..BetaConfig::default() },
            v_m: None,
        }
    }
}

/// Default upper limit for the exact-R integral.
pub fn default_v_m(state: &AlphaState, k: usize) -> f64 {
    (2.0 * thm2_v_max(state.u_bar, k)).min(0.95 * v_supremum(state))
}

/// Exact D(x, y; v) for every v in one enumeration pass, next to all
/// predictions. Predictions that cannot be formed at this (x, y) are NaN.
pub fn compare(x: f64, y: f64, v_grid: &[f64], k: usize) -> Result<Vec<ComparisonRow>> {
    compare_with(x, y, v_grid, &CompareOptions::new(k))
}

pub fn compare_with(x: f64, y: f64, v_grid: &[f64], opts: &CompareOptions) -> Result<Vec<ComparisonRow>> {
    if v_grid.iter().any(|v| !v.is_finite()) {
        return Err(FriaError::domain("v grid must be finite"));
    }
    let basis = primes_up_to(y)?;
    let state = solve_alpha(x, basis)?;
    let gammas: Vec<f64> = v_grid.iter().map(|v| v * state.varrho).collect();
    let stats = tail_stats(x, state.basis(), &gammas)?;
    let v_max = thm2_v_max(state.u_bar, opts.k);
    let coeffs = taylor_bj(&state, opts.k, &opts.taylor_beta).ok();
    let v_m = opts.v_m.unwrap_or_else(|| default_v_m(&state, opts.k));
    let model = Prop1Model::build(&state, v_m, &opts.prop1_beta).ok();
    let mut rows = Vec::with_capacity(v_grid.len());
    for (&v, st) in v_grid.iter().zip(&stats) {
        let phi = gauss_tail(v);
        let thm2 = match &coeffs {
            Some(c) if (0.0..=v_max).contains(&v) => predict_thm2(c, v, v_max).unwrap_or(f64::NAN),
            _ => f64::NAN,
        };
        let (prop1, prop1_env) = match &model {
            Some(m) if (0.0..=m.v_m).contains(&v) => (m.value(v).unwrap_or(f64::NAN), m.envelope(v)),
            _ => (f64::NAN, f64::NAN),
        };
        let d = st.d_value;
        rows.push(ComparisonRow {
            x,
            y,
            u_bar: state.u_bar,
            v,
            gamma: st.gamma,
            psi: st.psi,
            d_exact: d,
            ambiguous: st.ambiguous,
            phi_v: phi,
            thm1_envelope: thm1_envelope(v, state.u_bar),
            thm2_pred: thm2,
            prop1_pred: prop1,
            prop1_envelope: prop1_env,
            err_gauss: (d - phi).abs(),
            rel_err_gauss: (d / phi - 1.0).abs(),
            err_corrected: (d - thm2).abs(),
            err_prop1: (d - prop1).abs(),
            normalized_err: (d - phi).abs() * state.u_bar / (1.0 + v.powi(4)),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_values() {
        assert_eq!(gauss_tail(0.0), 0.5);
        for v in [0.1, 1.0, 2.5, 6.0] {
            assert!((gauss_tail(v) + gauss_tail(-v) - 1.0).abs() < 1e-15);
        }
        let (q, _) = integrate_real(
            |z| (-0.5 * z * z).exp() * INV_SQRT_2PI,
            1.0,
            40.0,
            QuadConfig { abs_tol: 1e-15, ..QuadConfig::default() },
        )
        .unwrap();
        assert!((gauss_tail(1.0) - q).abs() < 1e-12, "{} vs {q}", gauss_tail(1.0));
        assert!((gauss_tail(1.0) - 0.1586553).abs() < 1e-7);
    }

    #[test]
    fn arcsine_values() {
        assert_eq!(arcsine_law(0.0).unwrap(), 0.0);
        assert!((arcsine_law(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((arcsine_law(0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((arcsine_law(0.25).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(arcsine_law(1.5).is_err());
    }

    #[test]
    fn thm1_values() {
        assert_eq!(predict_thm1(0.0), 0.5);
        assert!((thm1_envelope(1.0, 25.0) - 2.0 / 25.0).abs() < 1e-15);
        assert!((thm1_envelope(4.0, 1.0) / thm1_envelope(2.0, 1.0) - 257.0 / 17.0).abs() < 1e-12);
    }

    fn gaussian_coeffs() -> TaylorCoeffs {
        TaylorCoeffs {
            k: 1,
            b: vec![-0.5],
            stencil_h: 0.0,
            span: 0.0,
            error_estimates: vec![0.0],
            odd_leakage: 0.0,
            fit_residual: 0.0,
        }
    }

    #[test]
    fn thm2_reduces_to_gaussian() {
        let c = gaussian_coeffs();
        for v in [0.0, 0.7, 1.5, 3.0] {
            assert!((predict_thm2(&c, v, 8.0).unwrap() - gauss_tail(v)).abs() < 1e-9);
        }
        let p = predict_thm2(&c, 0.0, 3.0).unwrap();
        assert!((p - (0.5 - gauss_tail(6.0))).abs() < 1e-9);
        assert!(predict_thm2(&c, 1.0, 3.0).unwrap() < p);
    }

    #[test]
    fn pchip_reproduces_monotone_data() {
        let x: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = x.iter().map(|t| -0.5 * t * t).collect();
        let p = Pchip::new(x.clone(), y.clone());
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(p.eval(*xi), *yi);
        }
        let mut prev = 1.0;
        for i in 0..=200 {
            let t = 2.0 * i as f64 / 200.0;
            let v = p.eval(t);
            assert!(v <= prev);
            assert!((v + 0.5 * t * t).abs() < 5e-3, "t = {t}: {}", v + 0.5 * t * t);
            prev = v;
        }
    }

    #[test]
    fn prop1_empty_interval_and_near_half() {
        let st = solve_alpha(1e30, primes_up_to(100.0).unwrap()).unwrap();
        let cfg = BetaConfig { ceiling: 64.0, ..BetaConfig::default() };
        let v_m = 0.9 * v_supremum(&st);
        let model = Prop1Model::build(&st, v_m, &cfg).unwrap();
        assert_eq!(model.value(v_m).unwrap(), 0.0);
        let at0 = model.value(0.0).unwrap();
        assert!((at0 - 0.5).abs() <= model.envelope(0.0), "{at0} vs envelope {}", model.envelope(0.0));
        let gauss = model.integral_with(0.0, |z| -0.5 * z * z).unwrap();
        assert!((gauss - at0).abs() <= 2.0 / st.u_bar);
    }

    #[test]
    fn compare_tiny_instance() {
        let rows = compare(3.0, 3.0, &[0.0], 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].d_exact - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rows[0].psi, 3);
    }

    #[test]
    fn compare_sanity() {
        let rows = compare(1e6, 50.0, &[0.0, 0.5, 1.0], 2).unwrap();
        assert!((rows[0].d_exact - 0.5).abs() <= 0.25);
        assert!(rows[0].d_exact >= 0.5);
        for r in &rows {
            assert!(r.normalized_err.is_finite() && r.normalized_err > 0.0);
            assert!((0.0..=1.0).contains(&r.d_exact) && (0.0..=1.0).contains(&r.phi_v));
            assert!((r.err_gauss - (r.d_exact - r.phi_v).abs()).abs() == 0.0);
        }
        assert!(rows.windows(2).all(|w| w[1].d_exact <= w[0].d_exact));
    }
}
