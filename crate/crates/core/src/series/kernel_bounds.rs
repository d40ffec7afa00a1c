//! The auxiliary functions 𝔯, 𝔰 and `L(ω) = csch²ω − 1/ω²`, and a seeded
//! sampler that checks their sign and size bounds.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    big_g1, csch2_minus_inv2, csch2_minus_inv2_closed, csch2_minus_inv2_series, g_func, principal_log, CutSide,
};
use crate::error::Result;

/// Slack for sign checks at points where the exact value is zero.
const ROUNDOFF: f64 = 1e-12;

/// `(𝔯(z), 𝔰(z))` with `𝔯 + i𝔰 = −1/2 + 1/log z − 1/(z − 1)`.
pub fn rs_funcs(z: Complex64, side: Option<CutSide>) -> Result<(f64, f64)> {
    let v = -big_g1(principal_log(z, side)?);
    Ok((v.re, v.im))
}

/// `L(ω) = csch²ω − 1/ω²`, by series near the origin.
pub fn l_func(omega: Complex64) -> Complex64 {
    csch2_minus_inv2(omega)
}

pub fn l_func_closed(omega: Complex64) -> Complex64 {
    csch2_minus_inv2_closed(omega)
}

pub fn l_func_series(omega: Complex64) -> Complex64 {
    csch2_minus_inv2_series(omega)
}

/// Result of one named bound over the sample.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub bound: String,
    pub checked: usize,
    pub passed: bool,
    /// Largest value of the checked quantity minus its bound (≤ 0 when the
    /// bound holds).
    pub worst_margin: f64,
    /// First violating point as `[re, im]`.
    pub counterexample: Option<[f64; 2]>,
}

struct Check {
    name: &'static str,
    bound: &'static str,
    checked: usize,
    worst: f64,
    counterexample: Option<[f64; 2]>,
}

impl Check {
    fn new(name: &'static str, bound: &'static str) -> Self {
        Check { name, bound, checked: 0, worst: f64::NEG_INFINITY, counterexample: None }
    }

    fn record(&mut self, margin: f64, at: Complex64) {
        self.checked += 1;
        if margin > self.worst || margin.is_nan() {
            self.worst = margin;
        }
        if (margin.is_nan() || margin > ROUNDOFF) && self.counterexample.is_none() {
            self.counterexample = Some([at.re, at.im]);
        }
    }

    fn finish(self) -> CheckOutcome {
        CheckOutcome {
            name: self.name.to_string(),
            bound: self.bound.to_string(),
            checked: self.checked,
            passed: self.counterexample.is_none(),
            worst_margin: self.worst,
            counterexample: self.counterexample,
        }
    }
}

/// Report of [`lemma8_suite`].
#[derive(Debug, Clone, Serialize)]
pub struct KernelBoundsReport {
    pub samples: usize,
    pub seed: u64,
    /// 𝔯(−2 + 0i).
    pub r_at_minus_two: f64,
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

/// Samples `z` with `|log|z|| ≤ 10`, `|arg z| ≤ π − 10⁻³` and `ω` in the
/// quadrant `0 ≤ Re ω ≤ 10`, `0 ≤ Im ω ≤ π/2`, and checks every bound on each.
pub fn lemma8_suite(sample_count: usize, seed: u64) -> Result<KernelBoundsReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Check::new("a", "|r(z)| <= 1/2");
    let mut b = Check::new("b", "r(z) <= 0 for |z| >= 1");
    let mut c = Check::new("c", "|r(z)| <= 1/10 for 1/2 <= |z| <= 2");
    let mut d = Check::new("d", "|s(z)| <= 1/pi");
    let mut e = Check::new("e", "|s(z)| <= 0.15 |arg z|");
    let mut g = Check::new("re_g", "Re g(z) >= -pi/2");
    let mut lr = Check::new("re_l", "-0.6 <= Re L(w) <= 0");
    let mut li = Check::new("im_l", "Im L(w) >= 0");
    let max_arg = PI - 1e-3;
    for _ in 0..sample_count {
        let modulus = rng.random_range(-10.0..=10.0f64).exp();
        let arg = rng.random_range(-max_arg..=max_arg);
        let z = Complex64::from_polar(modulus, arg);
        let (r, s) = rs_funcs(z, None)?;
        a.record(r.abs() - 0.5, z);
        if z.norm() >= 1.0 {
            b.record(r, z);
        }
        if (0.5..=2.0).contains(&z.norm()) {
            c.record(r.abs() - 0.1, z);
        }
        d.record(s.abs() - 1.0 / PI, z);
        e.record(s.abs() - 0.15 * arg.abs(), z);
        g.record(-FRAC_PI_2 - g_func(z, None)?.re, z);

        let omega = Complex64::new(rng.random_range(0.0..=10.0), rng.random_range(0.0..=FRAC_PI_2));
        let l = l_func(omega);
        lr.record((l.re).max(-0.6 - l.re), omega);
        li.record(-l.im, omega);
    }
    let r_at_minus_two = rs_funcs(Complex64::new(-2.0, 0.0), Some(CutSide::Above))?.0;
    let checks: Vec<CheckOutcome> = [a, b, c, d, e, g, lr, li].into_iter().map(Check::finish).collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(KernelBoundsReport { samples: sample_count, seed, r_at_minus_two, checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rs_at_one_and_minus_two() {
        let (r, s) = rs_funcs(cx(1.0, 0.0), None).unwrap();
        assert!(r.abs() < 1e-300 && s.abs() < 1e-300);
        let (r, _) = rs_funcs(cx(-2.0, 0.0), Some(CutSide::Above)).unwrap();
        assert!((r + 0.0997).abs() < 1e-3, "{r}");
        assert!(rs_funcs(cx(-2.0, 0.0), None).is_err());
    }

    #[test]
    fn rs_direct_formula() {
        for z in [cx(3.0, 1.0), cx(0.2, -0.5), cx(-4.0, 0.01), cx(1.3, 0.0)] {
            let direct = -0.5 + z.ln().inv() - (z - 1.0).inv();
            let (r, s) = rs_funcs(z, None).unwrap();
            assert!((direct - cx(r, s)).norm() < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn rs_inversion_symmetry() {
        for z in [cx(3.0, 1.0), cx(0.2, -0.5), cx(-4.0, 0.01), cx(1.3, 0.0)] {
            let (r1, s1) = rs_funcs(z, None).unwrap();
            let (r2, s2) = rs_funcs(z.inv(), None).unwrap();
            assert!((r1 + r2).abs() < 1e-13 && (s1 + s2).abs() < 1e-13, "z = {z}");
        }
    }

    #[test]
    fn real_z_has_zero_s() {
        for z in [0.01, 0.5, 2.0, 1e3] {
            assert_eq!(rs_funcs(cx(z, 0.0), None).unwrap().1, 0.0);
        }
    }

    #[test]
    fn l_series_and_closed_agree() {
        let w = cx(1e-4, 0.0);
        assert!((l_func_series(w) - l_func_closed(w)).norm() < 1e-8);
        for w in [cx(0.3, 0.2), cx(0.49, 0.0), cx(0.0, 0.45)] {
            assert!((l_func_series(w) - l_func_closed(w)).norm() < 1e-13, "w = {w}");
        }
        assert!((l_func(cx(0.0, 0.0)).re + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn l_partial_fraction_form() {
        let w = cx(0.8, 1.1);
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..200_000i64 {
            for kk in [k, -k] {
                let t = w + cx(0.0, kk as f64 * PI);
                sum += (t * t).inv();
            }
        }
        assert!((sum - l_func(w)).norm() < 1e-5);
    }

    #[test]
    fn suite_passes_and_is_deterministic() {
        let r1 = lemma8_suite(2000, 7).unwrap();
        let r2 = lemma8_suite(2000, 7).unwrap();
        assert!(r1.passed, "{:?}", r1.checks);
        assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
        assert!((r1.r_at_minus_two + 0.0997).abs() < 1e-3);
    }

    #[test]
    fn re_g_at_minus_ten() {
        assert!(g_func(cx(-10.0, 0.0), Some(CutSide::Above)).unwrap().re >= -FRAC_PI_2);
    }
}
