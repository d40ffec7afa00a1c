use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use frialab::alpha::{log_rankin_bound, phi_k, solve_alpha_log};
use frialab::beta::{solve_beta, v_range, BetaConfig};
use frialab::friable::{enumerate_friable, primes_up_to, psi_exact, tail_stats, PrimeBasis};
use frialab::law::{gauss_tail, predict_thm2};
use frialab::report::{emit_csv, Cell, Tabular};
use frialab::series::{f_y_eval, partial_f, partial_f_numeric, xi_big, xi_small_partial};
use num_complex::Complex64;
use proptest::prelude::*;

fn basis(y: u64) -> Arc<PrimeBasis> {
    Arc::new(primes_up_to(y as f64).unwrap())
}

fn largest_prime_factor(mut n: u64) -> u64 {
    let mut p = 2;
    let mut largest = 1;
    while p * p <= n {
        while n.is_multiple_of(p) {
            largest = p;
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        n
    } else {
        largest
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_is_sorted_and_reconstructs(x in 1u64..20_000, y in 2u64..60) {
        let b = basis(y);
        let all = enumerate_friable(x as f64, &b).unwrap();
        prop_assert!(all.windows(2).all(|w| w[0].n < w[1].n));
        for f in &all {
            let prod: u64 = f.exponents.iter().map(|&(i, e)| b.primes()[i].pow(e)).product();
            prop_assert_eq!(prod, f.n);
        }
        let scan = (1..=x).filter(|&n| largest_prime_factor(n) <= y).count() as u64;
        prop_assert_eq!(psi_exact(x as f64, &b).unwrap(), scan);
        prop_assert_eq!(all.len() as u64, scan);
    }

    #[test]
    fn tail_statistics_are_monotone_and_paired(x in 1u64..200_000, y in 2u64..100, g1 in 0.0f64..3.0, g2 in 0.0f64..3.0) {
        let b = basis(y);
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let st = tail_stats(x as f64, &b, &[0.0, lo, hi]).unwrap();
        prop_assert!(2.0 * st[0].weighted_sum >= st[0].psi as f64);
        prop_assert!(st[0].d_value >= 0.5);
        prop_assert!(st[1].weighted_sum <= st[0].weighted_sum);
        prop_assert!(st[2].weighted_sum <= st[1].weighted_sum);
        prop_assert!(st[2].d_value <= st[1].d_value);
        for s in &st {
            let resum: f64 = s.tail_by_tau.iter().map(|(&t, &c)| c as f64 / t as f64).sum();
            prop_assert_eq!(resum, s.weighted_sum);
            prop_assert_eq!(s.d_value, s.weighted_sum / s.psi as f64);
        }
    }
}

fn shared_basis(y: u64) -> Arc<PrimeBasis> {
    static CACHE: OnceLock<std::sync::Mutex<std::collections::HashMap<u64, Arc<PrimeBasis>>>> = OnceLock::new();
    let map = CACHE.get_or_init(Default::default);
    map.lock().unwrap().entry(y).or_insert_with(|| basis(y)).clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn saddle_residual_and_rankin(log_x in 3f64.ln()..690.0, log_y in 2f64.ln()..6.0 * 10f64.ln()) {
        let y = log_y.exp().floor().max(2.0) as u64;
        let st = solve_alpha_log(log_x, shared_basis(y)).unwrap();
        prop_assert!(st.residual <= 1e-10 * log_x, "residual {} at log x = {log_x}, y = {y}", st.residual);
        prop_assert!(st.varrho > 0.0);
        let at_alpha = log_rankin_bound(&st, st.alpha).unwrap();
        for m in [0.5, 0.9, 1.1, 2.0] {
            prop_assert!(log_rankin_bound(&st, m * st.alpha).unwrap() >= at_alpha - 1e-12 * at_alpha.abs());
        }
    }

    #[test]
    fn phi_ladder_differences(s in 0.05f64..2.0, y in 2u64..2000) {
        let b = shared_basis(y);
        let h = 1e-5;
        for k in 1..=3u32 {
            let exact = phi_k(s, &b, k).unwrap();
            let fd = (phi_k(s + h, &b, k - 1).unwrap() - phi_k(s - h, &b, k - 1).unwrap()) / (2.0 * h);
            prop_assert!((exact - fd).abs() <= 1e-6 * exact.abs(), "k = {k}: {exact} vs {fd}");
        }
    }
}

fn disk_point(r: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(r, theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn quotient_identity(r1 in 0.0f64..0.95, t1 in -PI..PI, r2 in 0.0f64..0.95, t2 in -PI..PI, near in any::<bool>(), eps in 1e-12f64..1e-6) {
        let a = disk_point(r1, t1);
        let b = if near { a + disk_point(eps, t2) } else { disk_point(r2, t2) };
        prop_assume!(b.norm() < 0.99);
        let lhs = xi_big(a, b).unwrap().exp() * (b - a);
        let rhs = (Complex64::new(1.0, 0.0) - a).ln() - (Complex64::new(1.0, 0.0) - b).ln();
        prop_assert!((lhs - rhs).norm() <= 1e-11, "a = {a}, b = {b}: {lhs} vs {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn euler_factor_bounded_by_real_point(sigma in 0.05f64..2.0, kappa in 0.05f64..2.0, t1 in -50.0f64..50.0, t2 in -50.0f64..50.0, p in prop::sample::select(vec![2.0f64, 3.0, 7.0, 101.0, 997.0])) {
        let l = p.ln();
        let z = |re: f64, im: f64| (-Complex64::new(re, im) * l).exp();
        let complex = xi_big(z(sigma, t1), z(kappa, t2)).unwrap();
        let real = xi_big(z(sigma, 0.0), z(kappa, 0.0)).unwrap();
        prop_assert!(complex.re <= real.re + 1e-12 * real.re.abs().max(1.0));
    }

    #[test]
    fn series_modulus_bound(sigma in 0.1f64..1.5, kappa in 0.1f64..1.5, tau in -200.0f64..200.0, y in 2u64..300) {
        let b = shared_basis(y);
        let line = f_y_eval(Complex64::new(sigma, tau), Complex64::new(kappa, 0.0), &b).unwrap();
        let real = f_y_eval(Complex64::new(sigma, 0.0), Complex64::new(kappa, 0.0), &b).unwrap();
        prop_assert!(line.log_abs <= real.log_abs + 1e-12 * real.log_abs.abs().max(1.0));
    }

    #[test]
    fn hessian_ratio_positive(log_z in -30.0f64..30.0) {
        prop_assume!(log_z.abs() > 1e-6);
        let z = log_z.exp();
        prop_assert!((1.0 + z) / (z - 1.0) * log_z - 2.0 > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_partials_match_differences(sigma in 0.2f64..1.2, kappa in 0.2f64..1.2, y in 2u64..200) {
        let b = shared_basis(y);
        for (k, l) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            let a = partial_f(k, l, sigma, kappa, &b).unwrap();
            let n = partial_f_numeric(k, l, sigma, kappa, &b).unwrap();
            prop_assert!((a - n).abs() <= 1e-6 * a.abs(), "({k},{l}) at ({sigma},{kappa}): {a} vs {n}");
        }
    }

    #[test]
    fn diagonal_xi_scaling(a in -0.5f64..0.8) {
        let za = Complex64::new(a, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        for (k, l) in [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            let at_a = xi_small_partial(k, l, za, za).unwrap().re * (1.0 - a).powi((k + l + 2) as i32);
            let at_0 = xi_small_partial(k, l, zero, zero).unwrap().re;
            prop_assert!((at_a - at_0).abs() <= 1e-6 * at_0.abs(), "({k},{l}) at a = {a}: {at_a} vs {at_0}");
        }
    }

    #[test]
    fn corrected_gaussian_matches_tail(v in 0.0f64..3.0) {
        let c = frialab::beta::TaylorCoeffs {
            k: 1,
            b: vec![-0.5],
            stencil_h: 0.0,
            span: 0.0,
            error_estimates: vec![0.0],
            odd_leakage: 0.0,
            fit_residual: 0.0,
        };
        prop_assert!((predict_thm2(&c, v, 8.0).unwrap() - gauss_tail(v)).abs() <= 1e-9);
    }
}

fn beta_state() -> &'static frialab::alpha::AlphaState {
    static STATE: OnceLock<frialab::alpha::AlphaState> = OnceLock::new();
    STATE.get_or_init(|| solve_alpha_log(1e12f64.ln(), basis(1000)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn saddle_pair_properties(frac in 0.02f64..0.95) {
        let st = beta_state();
        let cfg = BetaConfig::default();
        let v = frac * v_range(st, cfg.c);
        let here = solve_beta(st, v, &cfg).unwrap();
        let next = solve_beta(st, v * 1.02, &cfg).unwrap();
        prop_assert!(here.grad_norm <= 1e-9 * st.log_x);
        prop_assert!(here.r < 0.0);
        prop_assert!(next.beta1 > here.beta1);
        prop_assert!(next.beta2 < here.beta2);
    }
}

struct Row(Vec<f64>, u64);

impl Tabular for Row {
    fn header() -> Vec<&'static str> {
        vec!["a", "b", "c", "n"]
    }
    fn cells(&self) -> Vec<Cell> {
        let mut c: Vec<Cell> = self.0.iter().map(|&v| Cell::Real(v)).collect();
        c.push(Cell::Count(self.1));
        c
    }
}

fn any_real() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3f64..1e3,
        Just(0.0),
        Just(-0.0),
        Just(f64::MIN_POSITIVE),
    ]
}

proptest! {
    #[test]
    fn csv_round_trip(rows in prop::collection::vec((prop::collection::vec(any_real(), 3), any::<u64>()), 0..20)) {
        let rows: Vec<Row> = rows.into_iter().map(|(v, n)| Row(v, n)).collect();
        let bytes = emit_csv(&rows, &serde_json::json!({"seed": 0})).unwrap();
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes.as_slice());
        prop_assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), vec!["a", "b", "c", "n"]);
        let back: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        prop_assert_eq!(back.len(), rows.len());
        for (rec, row) in back.iter().zip(&rows) {
            for (j, &v) in row.0.iter().enumerate() {
                prop_assert_eq!(rec[j].parse::<f64>().unwrap().to_bits(), v.to_bits());
            }
            prop_assert_eq!(rec[3].parse::<u64>().unwrap(), row.1);
        }
    }
}
