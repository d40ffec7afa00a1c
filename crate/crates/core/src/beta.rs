//! The two-variable saddle point `(β₁, β₂) = (β(v), β(−v))`, solving
//!
//! ```text
//! ∂₁₀f_y(β₁, β₂) + (log x)/2 − vϱ = 0
//! ∂₀₁f_y(β₁, β₂) + (log x)/2 + vϱ = 0
//! ```
//!
//! together with the exponent `E(v) = f_y(β₁, β₂) + (β₁ + β₂)(log x)/2 − vϱ(β₁ − β₂)`
//! and its even Taylor coefficients.
//!
//! Since `∂₁₀f_y < 0` everywhere, the first equation has no solution once
//! `vϱ ≥ (log x)/2`; see [`v_supremum`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::alpha::AlphaState;
use crate::error::{FriaError, Result};
use crate::series::{f_derivs, FyDerivs};

/// Solver knobs for the two-variable system.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BetaConfig {
    /// `v_range = c √ū`.
    pub c: f64,
    /// Upper clip for both coordinates.
    pub ceiling: f64,
    /// Lower clip for both coordinates.
    pub floor: f64,
    /// Accepted residual, relative to `log x`.
    pub residual_rel: f64,
    pub max_newton: usize,
}

impl Default for BetaConfig {
    fn default() -> Self {
        BetaConfig { c: 0.25, ceiling: 1.0, floor: 1e-8, residual_rel: 1e-9, max_newton: 100 }
    }
}

/// Snapshot of the two-variable saddle at deviation `v`.
#[derive(Debug, Clone, Serialize)]
pub struct BetaState {
    #[serde(skip)]
    pub alpha_state: AlphaState,
    pub v: f64,
    /// γ = vϱ.
    pub gamma: f64,
    pub beta1: f64,
    pub beta2: f64,
    #[serde(rename = "E")]
    pub e: f64,
    /// R = E(v) − E(0).
    #[serde(rename = "R")]
    pub r: f64,
    pub grad_norm: f64,
    /// (∂₂₀f, ∂₁₁f, ∂₀₂f) at (β₁, β₂).
    pub hess_entries: [f64; 3],
    pub newton_steps: usize,
}

impl BetaState {
    pub fn hessian(&self) -> f64 {
        let [a, b, c] = self.hess_entries;
        a * c - b * b
    }
}

/// `c √ū`.
pub fn v_range(state: &AlphaState, c: f64) -> f64 {
    c * state.u_bar.sqrt()
}

/// `(log x)/(2ϱ)`: no solution exists for `|v|` at or beyond this value.
pub fn v_supremum(state: &AlphaState) -> f64 {
    state.log_x / (2.0 * state.varrho)
}

fn e_at_zero(state: &AlphaState) -> f64 {
    state.log_zeta + state.alpha * state.log_x
}

fn residual(state: &AlphaState, v: f64, d: &FyDerivs) -> [f64; 2] {
    let g = v * state.varrho;
    let half = 0.5 * state.log_x;
    [d.d10 + half - g, d.d01 + half + g]
}

fn norm2(r: [f64; 2]) -> f64 {
    r[0].hypot(r[1])
}

/// `dβ/dv` from differentiating the system: `J β′ = (ϱ, −ϱ)`.
fn tangent(state: &AlphaState, d: &FyDerivs) -> [f64; 2] {
    let h = d.hessian();
    let q = state.varrho;
    [q * (d.d02 + d.d11) / h, -q * (d.d20 + d.d11) / h]
}

struct NewtonOutcome {
    beta: [f64; 2],
    derivs: FyDerivs,
    norm: f64,
    steps: usize,
}

fn newton(state: &AlphaState, v: f64, start: [f64; 2], cfg: &BetaConfig) -> Result<NewtonOutcome> {
    let basis = state.basis();
    let tol = cfg.residual_rel * state.log_x;
    let clip = |x: f64| x.clamp(cfg.floor, cfg.ceiling);
    let mut beta = [clip(start[0]), clip(start[1])];
    let mut d = f_derivs(beta[0], beta[1], basis)?;
    let mut norm = norm2(residual(state, v, &d));
    for step in 0..cfg.max_newton {
        if norm <= 1e-6 * tol {
            return Ok(NewtonOutcome { beta, derivs: d, norm, steps: step });
        }
        let r = residual(state, v, &d);
        let h = d.hessian();
        let delta = [-(d.d02 * r[0] - d.d11 * r[1]) / h, -(d.d20 * r[1] - d.d11 * r[0]) / h];
        let mut lambda = 1.0;
        let mut improved = None;
        while lambda >= 1.0 / 1024.0 {
            let cand = [clip(beta[0] + lambda * delta[0]), clip(beta[1] + lambda * delta[1])];
            let dc = f_derivs(cand[0], cand[1], basis)?;
            let nc = norm2(residual(state, v, &dc));
            if nc < norm {
                improved = Some((cand, dc, nc));
                break;
            }
            lambda *= 0.5;
        }
        match improved {
            Some((cand, dc, nc)) => {
                let moved = (cand[0] - beta[0]).abs().max((cand[1] - beta[1]).abs());
                beta = cand;
                d = dc;
                norm = nc;
                if norm <= tol && moved <= 1e-15 * beta[0].max(beta[1]) {
                    return Ok(NewtonOutcome { beta, derivs: d, norm, steps: step + 1 });
                }
            }
            None if norm <= tol => return Ok(NewtonOutcome { beta, derivs: d, norm, steps: step }),
            None => {
                return Err(FriaError::solver(
                    "damped Newton stalled",
                    format!(
                        "v = {v}, beta = ({:e}, {:e}), residual = {norm:e}, clip = [{:e}, {}]",
                        beta[0], beta[1], cfg.floor, cfg.ceiling
                    ),
                ))
            }
        }
    }
    if norm <= tol {
        return Ok(NewtonOutcome { beta, derivs: d, norm, steps: cfg.max_newton });
    }
    Err(FriaError::solver(
        "damped Newton did not converge",
        format!("v = {v}, beta = ({:e}, {:e}), residual = {norm:e}", beta[0], beta[1]),
    ))
}

fn build_state(state: &AlphaState, v: f64, out: NewtonOutcome) -> BetaState {
    let [b1, b2] = out.beta;
    let d = out.derivs;
    let gamma = v * state.varrho;
    let e = d.f + 0.5 * (b1 + b2) * state.log_x - gamma * (b1 - b2);
    BetaState {
        alpha_state: state.clone(),
        v,
        gamma,
        beta1: b1,
        beta2: b2,
        e,
        r: e - e_at_zero(state),
        grad_norm: out.norm,
        hess_entries: [d.d20, d.d11, d.d02],
        newton_steps: out.steps,
    }
}

fn origin_state(state: &AlphaState) -> Result<BetaState> {
    let d = f_derivs(state.alpha, state.alpha, state.basis())?;
    Ok(BetaState {
        alpha_state: state.clone(),
        v: 0.0,
        gamma: 0.0,
        beta1: state.alpha,
        beta2: state.alpha,
        e: e_at_zero(state),
        r: 0.0,
        grad_norm: norm2(residual(state, 0.0, &d)),
        hess_entries: [d.d20, d.d11, d.d02],
        newton_steps: 0,
    })
}

/// Solves the system at `v` by continuation from `v = 0`, where `β₁ = β₂ = α`.
pub fn solve_beta(state: &AlphaState, v: f64, cfg: &BetaConfig) -> Result<BetaState> {
    if !v.is_finite() {
        return Err(FriaError::domain("v must be finite"));
    }
    if v == 0.0 {
        return origin_state(state);
    }
    let dv = (0.05 * state.u_bar.sqrt()).min(0.25);
    let n = (v.abs() / dv).ceil().max(1.0) as usize;
    let mut beta = [state.alpha, state.alpha];
    let mut d = f_derivs(beta[0], beta[1], state.basis())?;
    let mut last = None;
    for i in 1..=n {
        let vi = v * i as f64 / n as f64;
        let hstep = v / n as f64;
        let t = tangent(state, &d);
        let start = [beta[0] + hstep * t[0], beta[1] + hstep * t[1]];
        let out = newton(state, vi, start, cfg).map_err(|e| match e {
            FriaError::Solver { message, state: trace } => FriaError::Solver {
                message,
                state: format!("{trace}; continuation stopped at step {i}/{n} towards v = {v}"),
            },
            other => other,
        })?;
        beta = out.beta;
        d = out.derivs;
        last = Some(out);
    }
    let out = last.expect("at least one continuation step");
    for (x, name) in [(out.beta[0], "beta1"), (out.beta[1], "beta2")] {
        if x >= cfg.ceiling || x <= cfg.floor {
            return Err(FriaError::solver(
                "solution left the admissible box",
                format!("v = {v}, {name} = {x:e} at clip [{:e}, {}]", cfg.floor, cfg.ceiling),
            ));
        }
    }
    Ok(build_state(state, v, out))
}

/// E(v), the saddle exponent in log space.
pub fn e_func(state: &BetaState) -> f64 {
    state.e
}

/// `E″(0)` from symmetric second differences at `h` and `h/2`, one
/// Richardson step.
pub fn e_second_at_zero(state: &AlphaState, h: f64, cfg: &BetaConfig) -> Result<f64> {
    let second = |h: f64| -> Result<f64> {
        let p = solve_beta(state, h, cfg)?.r;
        let m = solve_beta(state, -h, cfg)?.r;
        Ok((p + m) / (h * h))
    };
    let coarse = second(h)?;
    let fine = second(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `E′(v)` by a five-point stencil, next to `−ϱ(β₁ − β₂)`.
pub fn e_prime_check(state: &AlphaState, v: f64, h: f64, cfg: &BetaConfig) -> Result<(f64, f64)> {
    let e = |t: f64| -> Result<f64> { Ok(solve_beta(state, t, cfg)?.e) };
    let stencil = (e(v - 2.0 * h)? - 8.0 * e(v - h)? + 8.0 * e(v + h)? - e(v + 2.0 * h)?) / (12.0 * h);
    let at = solve_beta(state, v, cfg)?;
    Ok((stencil, -state.varrho * (at.beta1 - at.beta2)))
}

/// Integrates `β′(v)` with classical RK4 from `v = 0` in `steps` steps.
pub fn ode_beta(state: &AlphaState, v: f64, steps: usize) -> Result<[f64; 2]> {
    if steps == 0 {
        return Err(FriaError::domain("ode_beta needs at least one step"));
    }
    let basis = state.basis();
    let rhs = |b: [f64; 2]| -> Result<[f64; 2]> {
        if !(b[0] > 0.0 && b[1] > 0.0) {
            return Err(FriaError::solver("ODE left the positive quadrant", format!("beta = {b:?}")));
        }
        Ok(tangent(state, &f_derivs(b[0], b[1], basis)?))
    };
    let h = v / steps as f64;
    let mut b = [state.alpha, state.alpha];
    let add = |b: [f64; 2], k: [f64; 2], s: f64| [b[0] + s * k[0], b[1] + s * k[1]];
    for _ in 0..steps {
        let k1 = rhs(b)?;
        let k2 = rhs(add(b, k1, 0.5 * h))?;
        let k3 = rhs(add(b, k2, 0.5 * h))?;
        let k4 = rhs(add(b, k3, h))?;
        for i in 0..2 {
            b[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(b)
}

/// Even Taylor coefficients of `R(v) = Σ_{j<k} b_j v^{2j+2}`.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorCoeffs {
    pub k: usize,
    pub b: Vec<f64>,
    /// Node spacing of the fitting stencil.
    pub stencil_h: f64,
    /// Half-width of the fitting stencil.
    pub span: f64,
    /// `|b_j(span) − b_j(span/2)|`.
    pub error_estimates: Vec<f64>,
    /// Largest odd-power contribution `|c_j| span^j` in an unrestricted fit.
    pub odd_leakage: f64,
    /// Largest absolute residual of the even fit.
    pub fit_residual: f64,
}

/// Fit residual cap relative to the largest |R| on the stencil.
const FIT_RESIDUAL_REL: f64 = 1e-2;

struct Fit {
    b: Vec<f64>,
    residual: f64,
    scale: f64,
    odd_leakage: f64,
}

fn lstsq(a: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    a.svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| FriaError::numeric(format!("least-squares solve failed: {e}"), f64::NAN))
}

fn fit_even(state: &AlphaState, k: usize, span: f64, cfg: &BetaConfig) -> Result<Fit> {
    let m = k + 1;
    let nodes: Vec<f64> = (-(m as i64)..=m as i64).map(|i| span * i as f64 / m as f64).collect();
    let rs: Vec<f64> = nodes.iter().map(|&v| solve_beta(state, v, cfg).map(|s| s.r)).collect::<Result<_>>()?;
    let n = nodes.len();
    let t: Vec<f64> = nodes.iter().map(|v| v / span).collect();
    let rhs = DVector::from_vec(rs.clone());
    let even = DMatrix::from_fn(n, k, |i, j| t[i].powi(2 * j as i32 + 2));
    let c = lstsq(even.clone(), rhs.clone())?;
    let resid = (&even * &c - &rhs).amax();
    let b = (0..k).map(|j| c[j] / span.powi(2 * j as i32 + 2)).collect();
    let deg = 2 * k + 2;
    let full = DMatrix::from_fn(n, deg, |i, j| t[i].powi(j as i32 + 1));
    let cf = lstsq(full, rhs)?;
    let odd_leakage = (0..deg).step_by(2).map(|j| cf[j].abs()).fold(0.0, f64::max);
    let scale = rs.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(Fit { b, residual: resid, scale, odd_leakage })
}

/// `b₀..b_{k−1}` by an even least-squares fit of R on `2k + 3` symmetric
/// nodes spanning `[−0.6 v_range, 0.6 v_range]`; errors from halving the span.
pub fn taylor_bj(state: &AlphaState, k: usize, cfg: &BetaConfig) -> Result<TaylorCoeffs> {
    if !(1..=4).contains(&k) {
        return Err(FriaError::domain(format!("taylor_bj supports 1 <= k <= 4, got {k}")));
    }
    let span = 0.6 * v_range(state, cfg.c);
    let wide = fit_even(state, k, span, cfg)?;
    let narrow = fit_even(state, k, 0.5 * span, cfg)?;
    if wide.residual > FIT_RESIDUAL_REL * wide.scale {
        return Err(FriaError::numeric("even polynomial fit of R is poor", wide.residual));
    }
    let error_estimates = wide.b.iter().zip(&narrow.b).map(|(a, b)| (a - b).abs()).collect();
    Ok(TaylorCoeffs {
        k,
        b: wide.b,
        stencil_h: span / (k + 1) as f64,
        span,
        error_estimates,
        odd_leakage: wide.odd_leakage,
        fit_residual: wide.residual,
    })
}

/// `𝓡_k(z) = Σ_{j<k} b_j z^{2j+2}`.
pub fn rk_poly(coeffs: &TaylorCoeffs, z: f64) -> f64 {
    let z2 = z * z;
    coeffs.b.iter().rev().fold(0.0, |acc, &b| acc * z2 + b) * z2
}

/// `Hess[f_y](β₁, β₂) / Hess[f_y](α, α)`.
pub fn hess_drift(state: &AlphaState, v: f64, cfg: &BetaConfig) -> Result<f64> {
    let at_v = solve_beta(state, v, cfg)?;
    let at_0 = origin_state(state)?;
    Ok(at_v.hessian() / at_0.hessian())
}

/// `(β₁ − α, v/ϱ)`.
pub fn beta_expansion_check(state: &AlphaState, v: f64, cfg: &BetaConfig) -> Result<(f64, f64)> {
    let s = solve_beta(state, v, cfg)?;
    Ok((s.beta1 - state.alpha, v / state.varrho))
}

/// Largest `c` in the doubling sequence `c₀, 2c₀, …` for which the system is
/// still solvable at `v = c √ū`, and the first failing one.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EmpiricalC6 {
    pub last_ok: Option<f64>,
    pub first_fail: Option<f64>,
}

pub fn empirical_c6(state: &AlphaState, cfg: &BetaConfig) -> EmpiricalC6 {
    let mut c = cfg.c;
    let mut last_ok = None;
    for _ in 0..16 {
        if solve_beta(state, v_range(state, c), cfg).is_err() {
            return EmpiricalC6 { last_ok, first_fail: Some(c) };
        }
        last_ok = Some(c);
        c *= 2.0;
    }
    EmpiricalC6 { last_ok, first_fail: None }
}
