//! The one-variable saddle point α(x, y) of `ζ(s, y) x^s` and its derivative
//! ladder.
//!
//! All prime sums are written in terms of `p^s − 1 = expm1(s log p)` so they
//! stay accurate for the tiny α that occur when `y` is small and `x` is huge.

use std::sync::Arc;

use serde::Serialize;

use crate::dickman::dickman_rho;
use crate::error::{FriaError, Result};
use crate::friable::PrimeBasis;

const ALPHA_LO: f64 = 1e-8;
const ALPHA_HI: f64 = 64.0;
const MAX_ITER: usize = 200;

fn check_abscissa(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(FriaError::domain(format!("abscissa s = {s} must be positive and finite")))
    }
}

/// `log(1 − p^{−s})`, accurate whether `p^{−s}` is close to 0 or to 1.
fn log_one_minus(s: f64, log_p: f64) -> f64 {
    let q = (-s * log_p).exp();
    if q < 0.5 {
        (-q).ln_1p()
    } else {
        (-(-s * log_p).exp_m1()).ln()
    }
}

/// Per-prime term of φ_k without the `(log p)^k` factor and sign, in terms of
/// `r = 1/(p^s − 1)`.
fn ladder_term(k: u32, r: f64) -> f64 {
    match k {
        1 => r,
        2 => r * (r + 1.0),
        3 => (2.0 * r + 1.0) * r * (r + 1.0),
        4 => ((r + 1.0) * (r + 1.0) + 4.0 * r * (r + 1.0) + r * r) * r * (r + 1.0),
        _ => unreachable!("ladder order checked by caller"),
    }
}

/// φ_k(s, y), the k-th derivative of `log ζ(s, y) = −Σ log(1 − p^{−s})`, for
/// `k ∈ 0..=4`.
pub fn phi_k(s: f64, basis: &PrimeBasis, k: u32) -> Result<f64> {
    check_abscissa(s)?;
    if k > 4 {
        return Err(FriaError::domain(format!("phi_k is implemented for k <= 4, got {k}")));
    }
    if k == 0 {
        return Ok(-basis.iter().map(|(_, l)| log_one_minus(s, l)).sum::<f64>());
    }
    let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
    let sum: f64 = basis
        .iter()
        .map(|(_, l)| {
            let r = 1.0 / (s * l).exp_m1();
            l.powi(k as i32) * ladder_term(k, r)
        })
        .sum();
    Ok(sign * sum)
}

/// φ̃_k(s, y) = Σ (log p)^k / (p^s − 1)^k.
pub fn phi_tilde_k(s: f64, basis: &PrimeBasis, k: u32) -> Result<f64> {
    check_abscissa(s)?;
    if k == 0 {
        return Err(FriaError::domain("phi_tilde_k requires k >= 1"));
    }
    Ok(basis.iter().map(|(_, l)| (l / (s * l).exp_m1()).powi(k as i32)).sum())
}

/// Snapshot of the one-variable saddle point at `(x, y)`.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaState {
    #[serde(skip)]
    basis: Arc<PrimeBasis>,
    pub x: f64,
    pub log_x: f64,
    pub y: f64,
    pub u: f64,
    /// min{u, π(y)}.
    pub u_bar: f64,
    pub pi_y: usize,
    pub alpha: f64,
    /// σ₁..σ₄ = φ_k(α, y).
    pub sigma: [f64; 4],
    /// σ̃₂ = φ̃₂(α, y).
    pub sigma2_tilde: f64,
    /// ϱ = ½ (σ₂ − σ̃₂/3)^{1/2}.
    pub varrho: f64,
    /// φ₀(α, y) = log ζ(α, y).
    pub log_zeta: f64,
    /// |Σ log p/(p^α − 1) − log x|.
    pub residual: f64,
}

impl AlphaState {
    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn basis_arc(&self) -> Arc<PrimeBasis> {
        Arc::clone(&self.basis)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma[1]
    }
}

fn saddle_lhs(alpha: f64, basis: &PrimeBasis) -> f64 {
    basis.iter().map(|(_, l)| l / (alpha * l).exp_m1()).sum()
}

/// Solves `Σ_{p ≤ y} log p / (p^α − 1) = log x` given `log x` directly, so
/// `x` itself may exceed the floating-point range.
pub fn solve_alpha_log(log_x: f64, basis: impl Into<Arc<PrimeBasis>>) -> Result<AlphaState> {
    let basis: Arc<PrimeBasis> = basis.into();
    if !(log_x >= 3f64.ln()) || !log_x.is_finite() {
        return Err(FriaError::domain(format!("saddle point requires x >= 3 (log x = {log_x})")));
    }
    let h = |a: f64| saddle_lhs(a, &basis) - log_x;
    let (mut lo, mut hi) = (ALPHA_LO, ALPHA_HI);
    if !(h(lo) > 0.0 && h(hi) < 0.0) {
        return Err(FriaError::solver(
            "saddle equation not bracketed",
            format!("h({lo}) = {}, h({hi}) = {}", h(lo), h(hi)),
        ));
    }
    let mut iter = 0;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
    }
    let mut alpha = 0.5 * (lo + hi);
    let tol = 1e-10 * log_x;
    loop {
        iter += 1;
        if iter > MAX_ITER {
            return Err(FriaError::solver(
                "saddle equation did not converge",
                format!("bracket [{lo:e}, {hi:e}], alpha = {alpha:e}"),
            ));
        }
        let value = h(alpha);
        if value > 0.0 {
            lo = lo.max(alpha);
        } else {
            hi = hi.min(alpha);
        }
        let slope = -phi_k(alpha, &basis, 2)?;
        let mut next = alpha - value / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - alpha).abs();
        alpha = next;
        if step <= 1e-13 * alpha && h(alpha).abs() <= tol {
            break;
        }
        if hi - lo <= 4.0 * f64::EPSILON * alpha && h(alpha).abs() <= tol {
            break;
        }
    }
    build_state(log_x, alpha, basis)
}

/// Solves the saddle equation at `x ≥ 3`.
pub fn solve_alpha(x: f64, basis: impl Into<Arc<PrimeBasis>>) -> Result<AlphaState> {
    if !(x >= 3.0) {
        return Err(FriaError::domain(format!("saddle point requires x >= 3, got {x}")));
    }
    let mut st = solve_alpha_log(x.ln(), basis)?;
    st.x = x;
    Ok(st)
}

fn build_state(log_x: f64, alpha: f64, basis: Arc<PrimeBasis>) -> Result<AlphaState> {
    let y = basis.y();
    let u = log_x / y.ln();
    let pi_y = basis.len();
    let sigma =
        [phi_k(alpha, &basis, 1)?, phi_k(alpha, &basis, 2)?, phi_k(alpha, &basis, 3)?, phi_k(alpha, &basis, 4)?];
    let sigma2_tilde = phi_tilde_k(alpha, &basis, 2)?;
    let varrho = 0.5 * (sigma[1] - sigma2_tilde / 3.0).sqrt();
    let log_zeta = phi_k(alpha, &basis, 0)?;
    let residual = (saddle_lhs(alpha, &basis) - log_x).abs();
    Ok(AlphaState {
        x: log_x.exp(),
        log_x,
        y,
        u,
        u_bar: u.min(pi_y as f64),
        pi_y,
        alpha,
        sigma,
        sigma2_tilde,
        varrho,
        log_zeta,
        residual,
        basis,
    })
}

/// ϱ(x, y).
pub fn varrho(state: &AlphaState) -> f64 {
    state.varrho
}

/// `log` of the Hildebrand–Tenenbaum main term
/// `ζ(α, y) x^α / (α √(2π φ₂(α, y)))`.
pub fn log_psi_ht(state: &AlphaState) -> f64 {
    state.log_zeta + state.alpha * state.log_x
        - state.alpha.ln()
        - 0.5 * (2.0 * std::f64::consts::PI * state.sigma2()).ln()
}

/// The Hildebrand–Tenenbaum approximation to Ψ(x, y).
pub fn psi_ht(state: &AlphaState) -> f64 {
    log_psi_ht(state).exp()
}

/// `log(ζ(σ, y) x^σ)`, Rankin's upper bound for Ψ(x, y) at abscissa σ.
pub fn log_rankin_bound(state: &AlphaState, sigma: f64) -> Result<f64> {
    Ok(phi_k(sigma, state.basis(), 0)? + sigma * state.log_x)
}

/// Leading-order estimates of α and φ₂(α, y) from x and y alone.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HtAsymptotics {
    pub alpha_est: f64,
    pub phi2_est: f64,
}

pub fn ht_asymptotics(state: &AlphaState) -> HtAsymptotics {
    let ly = state.y.ln();
    HtAsymptotics {
        alpha_est: (state.y / state.log_x).ln_1p() / ly,
        phi2_est: (1.0 + state.log_x / state.y) * state.log_x * ly,
    }
}

/// σ̃₂/σ₂ next to its limiting value `1/(1 + y/log x)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SigmaRatio {
    pub measured: f64,
    pub predicted: f64,
}

pub fn sigma_ratio(state: &AlphaState) -> SigmaRatio {
    SigmaRatio { measured: state.sigma2_tilde / state.sigma2(), predicted: 1.0 / (1.0 + state.y / state.log_x) }
}

/// `x ρ(u)` with `u = log x / log y`.
pub fn psi_dickman(x: f64, y: f64) -> Result<f64> {
    if !(x >= 3.0) || !(y >= 2.0) {
        return Err(FriaError::domain(format!("psi_dickman needs x >= 3, y >= 2 (x = {x}, y = {y})")));
    }
    Ok(x * dickman_rho(x.ln() / y.ln())?)
}
