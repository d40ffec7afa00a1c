//! Exact enumeration of y-friable integers and their divisor statistics.
//!
//! Everything here is integer-exact except the final division of the tail
//! counts by τ(n), which is deferred: tail counts are accumulated per divisor
//! count τ so the weighted sum `Σ #{d | n : log d ≥ θ_n} / τ(n)` is assembled
//! from a handful of exact integers at the end.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{FriaError, Result};

/// Largest `x` accepted by the enumerator (`n` is held in a `u64`).
pub const MAX_X: f64 = 9.0e18;

/// Divisors whose centred logarithm lies within this band of the threshold
/// are counted as reaching it.
pub const TIE_BAND: f64 = 1e-9;

/// The primes `p ≤ y` with their logarithms.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeBasis {
    y: f64,
    primes: Vec<u64>,
    logs: Vec<f64>,
}

impl PrimeBasis {
    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    /// π(y).
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Iterates over `(p, log p)`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.primes.iter().copied().zip(self.logs.iter().copied())
    }
}

/// Sieve of Eratosthenes up to `floor(y)`.
pub fn primes_up_to(y: f64) -> Result<PrimeBasis> {
    if !(y >= 2.0) {
        return Err(FriaError::domain(format!("prime bound y = {y} must satisfy y >= 2")));
    }
    if y > 4.0e9 {
        return Err(FriaError::Capacity(format!("prime bound y = {y} is beyond sieve range")));
    }
    let limit = y.floor() as usize;
    let mut composite = vec![false; limit + 1];
    let mut primes = Vec::new();
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        primes.push(i as u64);
        let mut j = i * i;
        while j <= limit {
            composite[j] = true;
            j += i;
        }
    }
    let logs = primes.iter().map(|&p| (p as f64).ln()).collect();
    Ok(PrimeBasis { y, primes, logs })
}

/// A friable integer stored as its exponent sequence over a [`PrimeBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// `(prime index, exponent ≥ 1)`, in increasing prime order.
    pub exponents: Vec<(usize, u32)>,
    pub n: u64,
    pub log_n: f64,
    pub tau: u64,
}

impl Factorization {
    /// The factorization of 1.
    pub fn one() -> Self {
        Factorization { exponents: Vec::new(), n: 1, log_n: 0.0, tau: 1 }
    }

    /// Builds a factorization from `(prime index, exponent)` pairs.
    pub fn from_exponents(basis: &PrimeBasis, pairs: &[(usize, u32)]) -> Result<Self> {
        let mut sorted: Vec<(usize, u32)> = pairs.iter().copied().filter(|&(_, e)| e > 0).collect();
        sorted.sort_unstable();
        let mut n: u64 = 1;
        let mut log_n = 0.0;
        let mut tau: u64 = 1;
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(FriaError::domain("repeated prime index in factorization"));
            }
        }
        for &(i, e) in &sorted {
            let p = *basis.primes.get(i).ok_or_else(|| FriaError::domain(format!("prime index {i} outside basis")))?;
            for _ in 0..e {
                n = n.checked_mul(p).ok_or_else(|| FriaError::Capacity("factorization exceeds 64-bit range".into()))?;
            }
            log_n += e as f64 * basis.logs[i];
            tau *= e as u64 + 1;
        }
        Ok(Factorization { exponents: sorted, n, log_n, tau })
    }
}

fn upper_limit(x: f64) -> Result<u64> {
    if !(x >= 1.0) {
        return Err(FriaError::domain(format!("x = {x} must satisfy x >= 1")));
    }
    if x > MAX_X {
        return Err(FriaError::Capacity(format!("x = {x:e} exceeds the 64-bit enumeration range ({MAX_X:e})")));
    }
    Ok(x.floor() as u64)
}

/// Depth-first walk over all `n ≤ limit` whose prime factors lie in
/// `primes[..=top]`, with the largest prime factor exactly `primes[top]`
/// when `top` is given. The callback sees the exponent stack in descending
/// prime order.
fn walk_subtree<F: FnMut(u64, &[(usize, u32)])>(primes: &[u64], top: Option<usize>, limit: u64, visit: &mut F) {
    let mut stack: Vec<(usize, u32)> = Vec::new();
    match top {
        None => visit(1, &stack),
        Some(t) => {
            let p = primes[t];
            let mut m = p;
            let mut e = 1u32;
            while m <= limit {
                stack.push((t, e));
                descend(primes, t, m, limit, &mut stack, visit);
                stack.pop();
                match m.checked_mul(p) {
                    Some(next) => m = next,
                    None => break,
                }
                e += 1;
            }
        }
    }
}

fn descend<F: FnMut(u64, &[(usize, u32)])>(
    primes: &[u64],
    below: usize,
    n: u64,
    limit: u64,
    stack: &mut Vec<(usize, u32)>,
    visit: &mut F,
) {
    visit(n, stack);
    for i in (0..below).rev() {
        let p = primes[i];
        let Some(mut m) = n.checked_mul(p) else { continue };
        let mut e = 1u32;
        while m <= limit {
            stack.push((i, e));
            descend(primes, i, m, limit, stack, visit);
            stack.pop();
            match m.checked_mul(p) {
                Some(next) => m = next,
                None => break,
            }
            e += 1;
        }
    }
}

/// Top-level subtrees: `None` for n = 1, then one per possible largest prime.
fn subtrees(basis: &PrimeBasis, limit: u64) -> Vec<Option<usize>> {
    let mut roots = vec![None];
    roots.extend((0..basis.len()).filter(|&i| basis.primes[i] <= limit).map(Some));
    roots
}

fn to_factorization(basis: &PrimeBasis, n: u64, stack: &[(usize, u32)]) -> Factorization {
    let mut exponents: Vec<(usize, u32)> = stack.to_vec();
    exponents.reverse();
    let log_n = exponents.iter().map(|&(i, e)| e as f64 * basis.logs[i]).sum();
    let tau = exponents.iter().map(|&(_, e)| e as u64 + 1).product();
    Factorization { exponents, n, log_n, tau }
}

/// All `n ≤ x` with `P(n) ≤ y`, in ascending order, with exact factorizations.
pub fn enumerate_friable(x: f64, basis: &PrimeBasis) -> Result<Vec<Factorization>> {
    let limit = upper_limit(x)?;
    let roots = subtrees(basis, limit);
    let mut all: Vec<Factorization> = roots
        .par_iter()
        .flat_map_iter(|&root| {
            let mut local = Vec::new();
            walk_subtree(&basis.primes, root, limit, &mut |n, stack| local.push(to_factorization(basis, n, stack)));
            local
        })
        .collect();
    all.sort_unstable_by_key(|f| f.n);
    Ok(all)
}

/// Ψ(x, y) by exact enumeration.
pub fn psi_exact(x: f64, basis: &PrimeBasis) -> Result<u64> {
    let limit = upper_limit(x)?;
    let roots = subtrees(basis, limit);
    Ok(roots
        .par_iter()
        .map(|&root| {
            let mut count = 0u64;
            walk_subtree(&basis.primes, root, limit, &mut |_, _| count += 1);
            count
        })
        .sum())
}

/// ϱ_n, the standard deviation of `log d` for a uniform random divisor `d | n`.
pub fn rho_n(f: &Factorization, basis: &PrimeBasis) -> f64 {
    f.exponents
        .iter()
        .map(|&(i, e)| {
            let nu = e as f64;
            nu * (nu + 2.0) / 12.0 * basis.logs[i] * basis.logs[i]
        })
        .sum::<f64>()
        .sqrt()
}

/// Centred divisor logarithms `log d − ½ log n` for every `d | n`, sorted.
///
/// Each value is `½ Σ (2k_i − ν_i) log p_i`, so `d` and `n/d` produce exact
/// negatives of one another and `d = √n` produces exactly zero.
fn centred_divisor_logs(pairs: &[(usize, u32)], logs: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.push(0.0);
    for &(i, nu) in pairs {
        let lp = logs[i];
        let len = out.len();
        out.reserve(len * nu as usize);
        // shift every existing entry by (2k − ν)/2 · log p for k = 0..=ν
        let base: Vec<f64> = std::mem::take(out);
        for k in 0..=nu {
            let shift = 0.5 * f64::from(2 * k as i32 - nu as i32) * lp;
            out.extend(base.iter().map(|&c| c + shift));
        }
    }
    out.sort_unstable_by(f64::total_cmp);
}

/// Number of divisors `d | n` with `log d ≥ theta`, and τ(n).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TailFraction {
    pub count: u64,
    pub tau: u64,
    /// Divisors within [`TIE_BAND`] of the threshold (counted in `count`).
    pub ambiguous: u64,
}

impl TailFraction {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.tau as f64
    }
}

fn tail_from_sorted(centred: &[f64], offset: f64) -> (u64, u64) {
    // count entries with c ≥ offset − band, and those inside the band
    let lo = centred.partition_point(|&c| c < offset - TIE_BAND);
    let hi = centred.partition_point(|&c| c <= offset + TIE_BAND);
    let count = (centred.len() - lo) as u64;
    let ambiguous = (hi.saturating_sub(lo)) as u64;
    (count, ambiguous)
}

/// `#{d | n : log d ≥ theta}` over τ(n).
pub fn divisor_tail_fraction(f: &Factorization, basis: &PrimeBasis, theta: f64) -> TailFraction {
    let mut buf = Vec::new();
    centred_divisor_logs(&f.exponents, &basis.logs, &mut buf);
    let (count, ambiguous) = tail_from_sorted(&buf, theta - 0.5 * f.log_n);
    TailFraction { count, tau: f.tau, ambiguous }
}

/// Exact divisor statistics at one threshold exponent γ.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactStats {
    pub x: f64,
    pub y: f64,
    pub gamma: f64,
    /// Ψ(x, y).
    pub psi: u64,
    /// τ ↦ Σ over n with τ(n) = τ of the tail counts; S = Σ count/τ.
    pub tail_by_tau: BTreeMap<u64, u64>,
    /// S(x, y; γ).
    pub weighted_sum: f64,
    /// D = S / Ψ.
    pub d_value: f64,
    /// Divisors found inside the tie band over the whole pass.
    pub ambiguous: u64,
}

impl ExactStats {
    fn assemble(x: f64, y: f64, gamma: f64, psi: u64, tail_by_tau: BTreeMap<u64, u64>, ambiguous: u64) -> Self {
        let weighted_sum: f64 = tail_by_tau.iter().map(|(&tau, &c)| c as f64 / tau as f64).sum();
        let d_value = if psi == 0 { 0.0 } else { weighted_sum / psi as f64 };
        ExactStats { x, y, gamma, psi, tail_by_tau, weighted_sum, d_value, ambiguous }
    }
}

#[derive(Default)]
struct Accumulator {
    psi: u64,
    tails: Vec<BTreeMap<u64, u64>>,
    ambiguous: Vec<u64>,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Accumulator { psi: 0, tails: vec![BTreeMap::new(); k], ambiguous: vec![0; k] }
    }

    fn merge(mut self, other: Accumulator) -> Accumulator {
        self.psi += other.psi;
        for (mine, theirs) in self.tails.iter_mut().zip(other.tails) {
            for (tau, c) in theirs {
                *mine.entry(tau).or_insert(0) += c;
            }
        }
        for (a, b) in self.ambiguous.iter_mut().zip(other.ambiguous) {
            *a += b;
        }
        self
    }
}

/// One enumeration pass computing [`ExactStats`] for every threshold exponent
/// in `gammas` (divisors counted when `log d ≥ ½ log n + γ`).
pub fn tail_stats(x: f64, basis: &PrimeBasis, gammas: &[f64]) -> Result<Vec<ExactStats>> {
    let limit = upper_limit(x)?;
    let roots = subtrees(basis, limit);
    let k = gammas.len();
    let acc = roots
        .par_iter()
        .map(|&root| {
            let mut acc = Accumulator::new(k);
            let mut buf = Vec::new();
            let mut pairs = Vec::new();
            walk_subtree(&basis.primes, root, limit, &mut |_, stack| {
                pairs.clear();
                pairs.extend_from_slice(stack);
                centred_divisor_logs(&pairs, &basis.logs, &mut buf);
                let tau = buf.len() as u64;
                acc.psi += 1;
                for (j, &g) in gammas.iter().enumerate() {
                    let (count, amb) = tail_from_sorted(&buf, g);
                    if count > 0 {
                        *acc.tails[j].entry(tau).or_insert(0) += count;
                    }
                    acc.ambiguous[j] += amb;
                }
            });
            acc
        })
        .reduce(|| Accumulator::new(k), Accumulator::merge);
    Ok(gammas
        .iter()
        .enumerate()
        .map(|(j, &g)| ExactStats::assemble(x, basis.y, g, acc.psi, acc.tails[j].clone(), acc.ambiguous[j]))
        .collect())
}

/// D(x, y; v) with threshold `log d ≥ ½ log n + vϱ`. A zero `rho` makes `v`
/// the threshold exponent γ itself.
pub fn d_exact(x: f64, basis: &PrimeBasis, v: f64, rho: f64) -> Result<ExactStats> {
    let gamma = if rho == 0.0 { v } else { v * rho };
    let mut out = tail_stats(x, basis, &[gamma])?;
    Ok(out.pop().expect("one threshold in, one out"))
}
