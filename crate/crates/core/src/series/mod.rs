//! The Euler-factor kernel Ξ(a, b) and the bivariate series
//! `f_y(s, w) = Σ_{p ≤ y} Ξ(p^{−s}, p^{−w})`.
//!
//! Everything is expressed through `G(w) = g(e^w) = log(sinh(w/2)/(w/2))`,
//! which is even, entire near the real axis and has simple series at 0.
//! With `A = 1 − a`, `B = 1 − b` and `ℓ = log(A/B)`:
//!
//! ```text
//! Ξ    = −½ log A − ½ log B − G(ℓ)
//! Ξ_a  = 1/(2A) + G′/A          Ξ_b  = 1/(2B) − G′/B
//! Ξ_aa = 1/(2A²) + (G′ − G″)/A² Ξ_ab = G″/(AB)
//! Ξ_bb = 1/(2B²) − (G″ + G′)/B²
//! ```

pub mod coeffs;
pub mod kernel_bounds;
pub mod perron;

use num_complex::Complex64;

use crate::error::{FriaError, Result};
use crate::friable::PrimeBasis;
use crate::quad::{integrate, QuadConfig};

pub use coeffs::{extract_xi_coeffs, XiCoeffTable};
pub use kernel_bounds::{
    l_func, l_func_closed, l_func_series, lemma8_suite, rs_funcs, CheckOutcome, KernelBoundsReport,
};
pub use perron::{fejer_identity, fejer_kernel, perron_indicator, FejerPair, PerronValue};

pub type ComplexValue = Complex64;

/// Which side of the negative real axis a boundary value is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    /// `−r + 0i`
    Above,
    /// `−r − 0i`
    Below,
}

/// Taylor coefficients of `coth h − 1/h = Σ c_n h^{2n−1}`.
const COTH_SERIES: [f64; 14] = [
    0.333_333_333_333_333_3,
    -0.022_222_222_222_222_223,
    0.002_116_402_116_402_116_5,
    -0.000_211_640_211_640_211_65,
    2.137_779_915_557_693_5e-5,
    -2.164_404_280_806_397_2e-6,
    2.192_594_785_187_377_8e-7,
    -2.221_460_878_997_967_8e-8,
    2.250_784_651_680_899_4e-9,
    -2.280_515_120_459_218_3e-10,
    2.310_643_259_900_262_4e-11,
    -2.341_170_681_982_488_2e-12,
    2.372_101_740_023_365_3e-13,
    -2.403_441_533_330_770_5e-14,
];

const SERIES_RADIUS: f64 = 0.5;
const G_SERIES_CUTOFF: f64 = 1e-3;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `log(1 + u)` on the principal branch, accurate for small `u`.
pub(crate) fn clog1p(u: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
    let im = u.im.atan2(1.0 + u.re);
    Complex64::new(re, im)
}

/// `e^z − 1`, accurate for small `z`.
pub(crate) fn cexpm1(z: Complex64) -> Complex64 {
    let half_sin = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half_sin * half_sin;
    let im = z.re.exp() * z.im.sin();
    Complex64::new(re, im)
}

fn wrap_arg(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = x % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

/// Principal `log z`, with points of the negative axis resolved by `side`.
pub fn principal_log(z: Complex64, side: Option<CutSide>) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(FriaError::domain("non-finite complex argument"));
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Err(FriaError::domain("logarithm of zero"));
    }
    if z.im == 0.0 && z.re < 0.0 {
        let arg = match side {
            Some(CutSide::Above) => std::f64::consts::PI,
            Some(CutSide::Below) => -std::f64::consts::PI,
            None => {
                return Err(FriaError::domain(format!("z = {} lies on the branch cut; a side must be given", z.re)))
            }
        };
        return Ok(Complex64::new((-z.re).ln(), arg));
    }
    Ok(z.ln())
}

/// `coth h − 1/h`.
pub(crate) fn coth_minus_inv(h: Complex64) -> Complex64 {
    if h.norm() < SERIES_RADIUS {
        let h2 = h * h;
        let mut acc = c(0.0);
        for &cn in COTH_SERIES.iter().rev() {
            acc = acc * h2 + cn;
        }
        return acc * h;
    }
    let (hh, sign) = if h.re < 0.0 { (-h, -1.0) } else { (h, 1.0) };
    let e = (-2.0 * hh).exp();
    ((c(1.0) + e) / (c(1.0) - e) - hh.inv()) * sign
}

/// `csch² h − 1/h²` by its Taylor series at 0.
pub(crate) fn csch2_minus_inv2_series(h: Complex64) -> Complex64 {
    let h2 = h * h;
    let mut acc = c(0.0);
    for (n, &cn) in COTH_SERIES.iter().enumerate().rev() {
        acc = acc * h2 - cn * (2 * n + 1) as f64;
    }
    acc
}

/// `csch² h − 1/h²` from hyperbolic functions.
pub(crate) fn csch2_minus_inv2_closed(h: Complex64) -> Complex64 {
    let hh = if h.re < 0.0 { -h } else { h };
    if hh.re < 20.0 {
        let (si, hi) = (hh.sinh().inv(), hh.inv());
        return (si - hi) * (si + hi);
    }
    let e = (-2.0 * hh).exp();
    let d = c(1.0) - e;
    4.0 * e / (d * d) - (hh * hh).inv()
}

fn csch2_minus_inv2(h: Complex64) -> Complex64 {
    if h.norm() < SERIES_RADIUS {
        csch2_minus_inv2_series(h)
    } else {
        csch2_minus_inv2_closed(h)
    }
}

/// `G(w) = log(sinh(w/2)/(w/2))`.
pub(crate) fn big_g(w: Complex64) -> Complex64 {
    let h = if w.re < 0.0 { -0.5 * w } else { 0.5 * w };
    if w.norm() < G_SERIES_CUTOFF {
        let h2 = h * h;
        return h2 * (1.0 / 6.0 + h2 * (-1.0 / 180.0 + h2 / 2835.0));
    }
    if h.re <= 1.0 {
        return (h.sinh() / h).ln();
    }
    let v = h - std::f64::consts::LN_2 + clog1p(-(-2.0 * h).exp()) - h.ln();
    Complex64::new(v.re, wrap_arg(v.im))
}

/// `G′(w) = ½(coth(w/2) − 2/w)`.
pub(crate) fn big_g1(w: Complex64) -> Complex64 {
    0.5 * coth_minus_inv(0.5 * w)
}

/// `G″(w) = −¼ (csch²(w/2) − 4/w²)`.
pub(crate) fn big_g2(w: Complex64) -> Complex64 {
    -0.25 * csch2_minus_inv2(0.5 * w)
}

/// `g(z) = log((z^{1/2} − z^{−1/2})/log z)`.
pub fn g_func(z: Complex64, side: Option<CutSide>) -> Result<Complex64> {
    Ok(big_g(principal_log(z, side)?))
}

fn check_unit_disk(a: Complex64, name: &str) -> Result<()> {
    if a.norm() < 1.0 {
        Ok(())
    } else {
        Err(FriaError::domain(format!("|{name}| = {} must be < 1", a.norm())))
    }
}

/// Ξ(a, b) on the unit bidisk.
pub fn xi_big(a: Complex64, b: Complex64) -> Result<Complex64> {
    check_unit_disk(a, "a")?;
    check_unit_disk(b, "b")?;
    let ell = clog1p((b - a) / (c(1.0) - b));
    Ok(-0.5 * clog1p(-a) - 0.5 * clog1p(-b) - big_g(ell))
}

/// Ξ from `(A, B) = (1 − a, 1 − b)` given directly, so that `a` and `b`
/// near 1 keep full relative precision in `A` and `B`.
fn xi_from_complements(big_a: Complex64, big_b: Complex64) -> Complex64 {
    let ell = clog1p((big_a - big_b) / big_b);
    -0.5 * big_a.ln() - 0.5 * big_b.ln() - big_g(ell)
}

/// `𝒦(t) = (1/π) arctan((1/π) log(t/(1 − t)))`.
pub fn xi_kernel(t: f64) -> f64 {
    use std::f64::consts::PI;
    if t <= 0.0 {
        return -0.5;
    }
    if t >= 1.0 {
        return 0.5;
    }
    ((t / (1.0 - t)).ln() / PI).atan() / PI
}

fn inv_pow(z: Complex64, n: usize) -> Complex64 {
    z.inv().powu(n as u32)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `∂^{k+ℓ}/∂a^k ∂b^ℓ` of `1/((1 − (tb + (1−t)a))(1 − (ta + (1−t)b)))`.
fn kernel_rational_partial(k: usize, l: usize, t: f64, a: Complex64, b: Complex64) -> Complex64 {
    let s = 1.0 - t;
    let u = c(1.0) - (t * b + s * a);
    let v = c(1.0) - (t * a + s * b);
    let mut acc = c(0.0);
    for i in 0..=k {
        for j in 0..=l {
            let (ki, lj) = (k - i, l - j);
            let du = factorial(i + j) * s.powi(i as i32) * t.powi(j as i32) * inv_pow(u, 1 + i + j);
            let dv = factorial(ki + lj) * t.powi(ki as i32) * s.powi(lj as i32) * inv_pow(v, 1 + ki + lj);
            acc += binomial(k, i) * binomial(l, j) * du * dv;
        }
    }
    acc
}

/// `∂^{k+ℓ} ξ/∂a^k ∂b^ℓ` by quadrature of the kernel representation.
pub fn xi_small_partial(k: usize, l: usize, a: Complex64, b: Complex64) -> Result<Complex64> {
    check_unit_disk(a, "a")?;
    check_unit_disk(b, "b")?;
    let cfg = QuadConfig::default();
    let r = integrate(|t| (t - 0.5) * xi_kernel(t) * kernel_rational_partial(k, l, t, a, b), 0.0, 1.0, cfg)?;
    Ok(r.value)
}

/// ξ(a, b), the regular factor with `g((1−a)/(1−b)) = (a − b)² ξ(a, b)`.
pub fn xi_small(a: Complex64, b: Complex64) -> Result<Complex64> {
    xi_small_partial(0, 0, a, b)
}

/// One evaluation of `f_y` at a complex point.
#[derive(Debug, Clone, Copy)]
pub struct FySample {
    pub s: Complex64,
    pub w: Complex64,
    /// f_y(s, w).
    pub f: Complex64,
    /// log |F_y(s, w)| = Re f.
    pub log_abs: f64,
    /// arg F_y(s, w) in (−π, π].
    pub arg: f64,
}

impl FySample {
    /// F_y(s, w) = exp f.
    pub fn value(&self) -> Complex64 {
        self.f.exp()
    }
}

/// `f_y(s, w) = Σ_{p ≤ y} Ξ(p^{−s}, p^{−w})`.
pub fn f_y_eval(s: Complex64, w: Complex64, basis: &PrimeBasis) -> Result<FySample> {
    if !(s.re > 0.0 && w.re > 0.0) {
        return Err(FriaError::domain("f_y needs Re s > 0 and Re w > 0"));
    }
    let mut f = c(0.0);
    for (_, l) in basis.iter() {
        let big_a = -cexpm1(-s * l);
        let big_b = -cexpm1(-w * l);
        f += xi_from_complements(big_a, big_b);
    }
    Ok(FySample { s, w, f, log_abs: f.re, arg: wrap_arg(f.im) })
}

/// `f_y` and its partial derivatives of order ≤ 2 in `(s, w)` at a real
/// point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FyDerivs {
    pub f: f64,
    pub d10: f64,
    pub d01: f64,
    pub d20: f64,
    pub d11: f64,
    pub d02: f64,
}

impl FyDerivs {
    pub fn hessian(&self) -> f64 {
        self.d20 * self.d02 - self.d11 * self.d11
    }
}

/// Closed-form `f_y` derivatives up to order 2 at real `(σ, κ)`.
pub fn f_derivs(sigma: f64, kappa: f64, basis: &PrimeBasis) -> Result<FyDerivs> {
    if !(sigma > 0.0 && kappa > 0.0) || !sigma.is_finite() || !kappa.is_finite() {
        return Err(FriaError::domain(format!(
            "f_y derivatives need positive finite (sigma, kappa), got ({sigma}, {kappa})"
        )));
    }
    let mut d = FyDerivs { f: 0.0, d10: 0.0, d01: 0.0, d20: 0.0, d11: 0.0, d02: 0.0 };
    for (_, l) in basis.iter() {
        let a = (-sigma * l).exp();
        let b = (-kappa * l).exp();
        let big_a = -(-sigma * l).exp_m1();
        let big_b = -(-kappa * l).exp_m1();
        let ell = ((big_a - big_b) / big_b).ln_1p();
        let w = c(ell);
        let g0 = big_g(w).re;
        let g1 = big_g1(w).re;
        let g2 = big_g2(w).re;
        let xa = 0.5 / big_a + g1 / big_a;
        let xb = 0.5 / big_b - g1 / big_b;
        let xaa = (0.5 + g1 - g2) / (big_a * big_a);
        let xab = g2 / (big_a * big_b);
        let xbb = (0.5 - g2 - g1) / (big_b * big_b);
        let l2 = l * l;
        d.f += -0.5 * big_a.ln() - 0.5 * big_b.ln() - g0;
        d.d10 += -l * a * xa;
        d.d01 += -l * b * xb;
        d.d20 += l2 * (a * xa + a * a * xaa);
        d.d11 += l2 * a * b * xab;
        d.d02 += l2 * (b * xb + b * b * xbb);
    }
    Ok(d)
}

fn richardson_step<F: Fn(f64) -> Result<f64>>(f: F, x: f64, h: f64) -> Result<f64> {
    if x - h <= 0.0 {
        return Err(FriaError::numeric(format!("difference step {h:e} collapses the abscissa {x:e}"), h));
    }
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let coarse = d(h)?;
    let fine = d(0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

fn step_for(x: f64) -> f64 {
    1e-3 * x.max(1e-2)
}

/// `∂^{k+ℓ} f_y/∂s^k ∂w^ℓ` at real `(σ, κ)`. Orders up to 2 use closed forms;
/// higher orders difference the order-2 closed forms.
pub fn partial_f(k: u32, l: u32, sigma: f64, kappa: f64, basis: &PrimeBasis) -> Result<f64> {
    if k + l <= 2 {
        let d = f_derivs(sigma, kappa, basis)?;
        return Ok(match (k, l) {
            (0, 0) => d.f,
            (1, 0) => d.d10,
            (0, 1) => d.d01,
            (2, 0) => d.d20,
            (1, 1) => d.d11,
            (0, 2) => d.d02,
            _ => unreachable!(),
        });
    }
    if k > 0 {
        richardson_step(|s| partial_f(k - 1, l, s, kappa, basis), sigma, step_for(sigma))
    } else {
        richardson_step(|w| partial_f(k, l - 1, sigma, w, basis), kappa, step_for(kappa))
    }
}

/// Partial derivative of `f_y` by nested central differences of the plain
/// series, with no closed forms involved.
pub fn partial_f_numeric(k: u32, l: u32, sigma: f64, kappa: f64, basis: &PrimeBasis) -> Result<f64> {
    if k == 0 && l == 0 {
        return Ok(f_y_eval(c(sigma), c(kappa), basis)?.f.re);
    }
    if k > 0 {
        richardson_step(|s| partial_f_numeric(k - 1, l, s, kappa, basis), sigma, step_for(sigma))
    } else {
        richardson_step(|w| partial_f_numeric(k, l - 1, sigma, w, basis), kappa, step_for(kappa))
    }
}

/// `Hess[f_y](σ, κ) = ∂₂₀f ∂₀₂f − (∂₁₁f)²`.
pub fn hessian_f(sigma: f64, kappa: f64, basis: &PrimeBasis) -> Result<f64> {
    Ok(f_derivs(sigma, kappa, basis)?.hessian())
}

/// Membership of `(σ, κ)` in the region of the saddle-point analysis around α.
pub fn in_region(sigma: f64, kappa: f64, delta: f64, alpha: f64, basis: &PrimeBasis) -> bool {
    let unit = |x: f64| x > 0.0 && x <= 1.0;
    if !(unit(sigma) && unit(kappa)) || !(delta >= 0.0) {
        return false;
    }
    if (sigma - alpha) * (alpha - kappa) < 0.0 {
        return false;
    }
    let ratio = (-(-sigma * std::f64::consts::LN_2).exp_m1()) / (-(-kappa * std::f64::consts::LN_2).exp_m1());
    if ratio < 1.0 / (1.0 + delta) || ratio > 1.0 + delta {
        return false;
    }
    (sigma - kappa).abs() * basis.y().ln() <= delta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::{phi_k, solve_alpha};
    use crate::friable::primes_up_to;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn g_values() {
        assert!(g_func(c(1.0), None).unwrap().norm() < 1e-300);
        let want = (1.5 / 4f64.ln()).ln();
        assert!((g_func(c(4.0), None).unwrap().re - want).abs() < 1e-14);
        assert!((want - 0.078857).abs() < 1e-4);
        for z in [cx(0.3, 0.7), cx(5.0, -2.0), cx(1.0 + 1e-5, 1e-6), cx(-3.0, 0.2)] {
            let d = g_func(z, None).unwrap() - g_func(z.inv(), None).unwrap();
            assert!(d.norm() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn g_direct_formula_agreement() {
        for z in [cx(0.3, 0.7), cx(5.0, -2.0), cx(-3.0, 0.2), cx(1e4, 1.0), cx(1e-3, -1e-3)] {
            let lz = z.ln();
            let direct = ((z.sqrt() - z.sqrt().inv()) / lz).ln();
            assert!((g_func(z, None).unwrap() - direct).norm() < 1e-12, "z = {z}");
        }
    }

    #[test]
    fn g_on_cut_needs_side() {
        assert!(matches!(g_func(c(-2.0), None), Err(FriaError::Domain(_))));
        let up = g_func(c(-2.0), Some(CutSide::Above)).unwrap();
        let down = g_func(c(-2.0), Some(CutSide::Below)).unwrap();
        assert!((up - down.conj()).norm() < 1e-15);
        let near = g_func(cx(-2.0, 1e-12), None).unwrap();
        assert!((up - near).norm() < 1e-10);
    }

    #[test]
    fn g_series_switch_is_continuous() {
        for eps in [0.999e-3, 1.001e-3] {
            let z = Complex64::from_polar(1.0, 0.0) * cx(eps, 0.0).exp();
            let lz = z.ln();
            let direct = ((0.5 * lz).sinh() / (0.5 * lz)).ln();
            assert!((g_func(z, None).unwrap() - direct).norm() < 1e-15);
        }
    }

    #[test]
    fn xi_big_examples() {
        let a = cx(0.3, 0.1);
        assert!((xi_big(a, a).unwrap() + (c(1.0) - a).ln()).norm() < 1e-14);
        let a = c(0.4);
        let want = (-(0.6f64).ln() / 0.4).ln();
        assert!((xi_big(a, c(0.0)).unwrap().re - want).abs() < 1e-14);
        let lhs = xi_big(c(0.3), c(0.5)).unwrap().exp() * 0.2;
        assert!((lhs.re - (0.7f64.ln() - 0.5f64.ln())).abs() < 1e-12);
        assert!(matches!(xi_big(c(1.0), c(0.0)), Err(FriaError::Domain(_))));
    }

    #[test]
    fn xi_small_values() {
        let x00 = xi_small(c(0.0), c(0.0)).unwrap();
        assert!((x00.re - 1.0 / 24.0).abs() < 1e-12);
        let (a, b) = (cx(0.2, 0.3), cx(-0.4, 0.1));
        let d = xi_small(a, b).unwrap() - xi_small(b, a).unwrap();
        assert!(d.norm() < 1e-12);
        for (a, b) in [(c(0.3), c(-0.2)), (cx(0.1, 0.5), cx(-0.6, -0.2)), (c(0.9), c(0.1))] {
            let z = (c(1.0) - a) / (c(1.0) - b);
            let lhs = (a - b) * (a - b) * xi_small(a, b).unwrap();
            assert!((lhs - g_func(z, None).unwrap()).norm() < 1e-10, "a = {a}, b = {b}");
        }
    }

    #[test]
    fn xi_diagonal_scaling() {
        for (k, l) in [(0usize, 0usize), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            let scaled: Vec<f64> = [-0.5, 0.0, 0.3, 0.7]
                .iter()
                .map(|&a| xi_small_partial(k, l, c(a), c(a)).unwrap().re * (1.0 - a).powi((k + l + 2) as i32))
                .collect();
            for v in &scaled {
                assert!((v - scaled[0]).abs() < 1e-6 * scaled[0].abs().max(1e-3), "(k, l) = ({k}, {l}): {scaled:?}");
                assert!(*v > 0.0);
            }
        }
    }

    #[test]
    fn xi_partials_match_hessian_formula() {
        // The determinant of the Ξ Hessian has a closed form in z = (1−a)/(1−b).
        for (a, b) in [(0.2, 0.5), (0.7, 0.1), (0.4, 0.41)] {
            let (big_a, big_b): (f64, f64) = (1.0 - a, 1.0 - b);
            let ell: f64 = (big_a / big_b).ln();
            let g1 = big_g1(c(ell)).re;
            let g2 = big_g2(c(ell)).re;
            let xaa = (0.5 + g1 - g2) / (big_a * big_a);
            let xab = g2 / (big_a * big_b);
            let xbb = (0.5 - g2 - g1) / (big_b * big_b);
            let det = xaa * xbb - xab * xab;
            let z: f64 = big_a / big_b;
            let num = (1.0 + z) / (z - 1.0) * z.ln() - 2.0;
            let want = num / (big_a * big_a * big_b * big_b * z.ln() * z.ln());
            assert!(((det - want) / want).abs() < 1e-6, "({a}, {b}): {det} vs {want}");
            assert!(num > 0.0);
        }
        let xaa = (0.5 - 1.0 / 12.0) / 0.36;
        let det = xaa * xaa - (1.0 / 12.0 / 0.36f64).powi(2);
        assert!((det - 1.0 / (6.0 * 0.6f64.powi(4))).abs() < 1e-12);
    }

    #[test]
    fn f_y_single_prime_euler_factor() {
        let b = primes_up_to(2.0).unwrap();
        let (s, w) = (cx(0.7, 1.3), cx(1.1, -0.4));
        let two = c(2.0);
        let (ps, pw) = (two.powc(-s), two.powc(-w));
        let want = ((c(1.0) - ps).ln() - (c(1.0) - pw).ln()) / (pw - ps);
        let got = f_y_eval(s, w, &b).unwrap().value();
        assert!((got - want).norm() < 1e-13);
    }

    #[test]
    fn f_y_on_diagonal_is_log_zeta() {
        let b = primes_up_to(1000.0).unwrap();
        let st = solve_alpha(1e12, b.clone()).unwrap();
        let smp = f_y_eval(c(st.alpha), c(st.alpha), &b).unwrap();
        assert!(((smp.value().re - st.log_zeta.exp()) / st.log_zeta.exp()).abs() < 1e-12);
        let sw = f_y_eval(cx(0.5, 2.0), cx(0.8, -1.0), &b).unwrap();
        let ws = f_y_eval(cx(0.8, -1.0), cx(0.5, 2.0), &b).unwrap();
        assert!((sw.f - ws.f).norm() < 1e-10);
    }

    #[test]
    fn ladder_identities_at_saddle() {
        let b = primes_up_to(1000.0).unwrap();
        let st = solve_alpha(1e12, b.clone()).unwrap();
        let d = f_derivs(st.alpha, st.alpha, &b).unwrap();
        let half_phi1 = 0.5 * phi_k(st.alpha, &b, 1).unwrap();
        assert!(((d.d10 - half_phi1) / half_phi1).abs() < 1e-12);
        assert!(((d.d01 - half_phi1) / half_phi1).abs() < 1e-12);
        let want20 = st.sigma2() / 2.0 - st.sigma2_tilde / 12.0;
        assert!(((d.d20 - want20) / want20).abs() < 1e-8);
        let want11 = st.sigma2_tilde / 12.0;
        assert!(((d.d11 - want11) / want11).abs() < 1e-8);
        let hess = st.varrho * st.varrho * st.sigma2();
        assert!(((d.hessian() - hess) / hess).abs() < 1e-8);
    }

    #[test]
    fn closed_forms_match_differences() {
        let b = primes_up_to(100.0).unwrap();
        for (s, k) in [(0.6, 0.8), (0.3, 0.25), (0.9, 0.4)] {
            for (i, j) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
                let an = partial_f(i, j, s, k, &b).unwrap();
                let fd = partial_f_numeric(i, j, s, k, &b).unwrap();
                assert!(((an - fd) / an).abs() < 1e-6, "({i},{j}) at ({s},{k}): {an} vs {fd}");
            }
        }
    }

    #[test]
    fn third_order_by_differences() {
        let b = primes_up_to(50.0).unwrap();
        let (s, k) = (0.5, 0.6);
        let a = partial_f(3, 0, s, k, &b).unwrap();
        let n = partial_f_numeric(3, 0, s, k, &b).unwrap();
        assert!(((a - n) / a).abs() < 1e-4, "{a} vs {n}");
        // On the diagonal, ∂₃₀ + ∂₂₁ + ∂₁₂ + ∂₀₃ equals φ₃ (chain rule along s = w).
        let sum: f64 = [(3, 0), (2, 1), (1, 2), (0, 3)]
            .iter()
            .map(|&(i, j)| partial_f(i, j, s, s, &b).unwrap() * binomial(3, i as usize))
            .sum();
        let phi3 = phi_k(s, &b, 3).unwrap();
        assert!(((sum - phi3) / phi3).abs() < 1e-6, "{sum} vs {phi3}");
    }

    #[test]
    fn tiny_abscissa_step_collapse() {
        let b = primes_up_to(10.0).unwrap();
        assert!(partial_f(3, 0, 1e-6, 0.5, &b).is_err());
    }

    #[test]
    fn hessian_positive_on_grid() {
        let b = primes_up_to(200.0).unwrap();
        for i in 1..=10 {
            for j in 1..=10 {
                let (s, k) = (i as f64 / 10.0, j as f64 / 10.0);
                let d = f_derivs(s, k, &b).unwrap();
                assert!(d.hessian() > 0.0, "({s}, {k})");
                assert!(d.d20 + d.d11 > 0.0);
            }
        }
    }

    #[test]
    fn region_membership() {
        let b = primes_up_to(100.0).unwrap();
        let alpha = 0.6;
        assert!(in_region(alpha, alpha, 0.0, alpha, &b));
        assert!(!in_region(0.61, 0.59, 0.0, alpha, &b));
        assert!(!in_region(0.62, 0.63, 1.0, alpha, &b));
        let deltas = [0.01, 0.05, 0.1, 0.5];
        for w in deltas.windows(2) {
            for (s, k) in [(0.601, 0.599), (0.62, 0.58), (0.65, 0.55)] {
                if in_region(s, k, w[0], alpha, &b) {
                    assert!(in_region(s, k, w[1], alpha, &b));
                }
            }
        }
    }
}
