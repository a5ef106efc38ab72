//! Traces of Hecke operators on `S_k(Γ₀(p))` from the Eichler–Selberg trace
//! formula, and the cusp spaces they generate.
//!
//! For prime level `p` and trivial character,
//!
//! ```text
//! 12·Tr T_n = [n = s², p ∤ s]·n^{k/2-1}(k-1)(p+1)
//!           - Σ_{t² < 4n} P_k(t, n)·w(t, n)
//!           - 6·Σ_{d | n} min(d, n/d)^{k-1}·([p ∤ d] + [p ∤ n/d])
//!           + [k = 2]·12·Σ_{d | n, p ∤ n/d} d
//! ```
//!
//! with `P_k(t, n)` the coefficient of `x^{k-2}` in `1/(1 - tx + nx²)` and,
//! writing `D = 4n - t²` and `H₆ = 6·H`,
//!
//! ```text
//! w(t, n) = μ₀·(H₆(D) - H₆(D/p²)) + μ₁·H₆(D/p²)
//! μ₀ = 1 + ((t² - 4n)/p)  if p ∤ n,   [p ∤ t]  otherwise
//! μ₁ = (p + 1)·[p ∤ t]
//! ```
//!
//! where `H₆(D/p²)` is zero unless `p² | D`. [`trace_tn`] evaluates this
//! directly in big integers; [`TraceTable`] evaluates it for all `n ≤ N` at
//! once modulo several word primes, via power sums of `t²`, and lifts the
//! results by Chinese remaindering.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exec;
use crate::modp::{self, pool_prime, Crt, Prime};
use crate::qseries::Rat;
use crate::spaces::EchelonBasis;

/// Six times the Hurwitz class number of a positive `m`.
fn hurwitz6(m: u64) -> i64 {
    if m % 4 == 1 || m % 4 == 2 {
        return 0;
    }
    let mut total = 0i64;
    let mut a: u64 = 1;
    while 3 * a * a <= m {
        let parity = m % 2;
        let mut b = -(a as i64);
        while b <= a as i64 {
            if (b.unsigned_abs() % 2) == parity {
                let num = m + (b * b) as u64;
                if num.is_multiple_of(4 * a) {
                    let c = num / (4 * a);
                    total += form_weight(a, b, c);
                }
            }
            b += 1;
        }
        a += 1;
    }
    total
}

/// Weight (in units of 1/6) of the form `[a, b, c]` if it is reduced, else 0.
fn form_weight(a: u64, b: i64, c: u64) -> i64 {
    let ab = b.unsigned_abs();
    if ab > a || a > c {
        return 0;
    }
    if (ab == a || a == c) && b < 0 {
        return 0;
    }
    if a == c && b == 0 {
        3
    } else if ab == a && a == c {
        2
    } else {
        6
    }
}

/// Hurwitz class number `H(m)`: reduced positive forms of discriminant `-m`,
/// with `a(x² + y²)` counted 1/2 and `a(x² + xy + y²)` counted 1/3.
/// `H(0) = -1/12`; residues 1, 2 mod 4 give 0.
pub fn hurwitz(m: i64) -> Result<Rat> {
    if m < 0 {
        return Err(Error::InvalidArgument(format!(
            "Hurwitz class number of negative {m}"
        )));
    }
    if m == 0 {
        return Ok(Rat::new(BigInt::from(-1), BigInt::from(12)));
    }
    Ok(Rat::new(BigInt::from(hurwitz6(m as u64)), BigInt::from(6)))
}

static HURWITZ_TABLE: OnceLock<RwLock<Arc<Vec<i64>>>> = OnceLock::new();

/// `6·H(D)` for `0 < D ≤ d_max` (entry 0 unused), shared and grown on demand.
pub fn hurwitz6_table(d_max: usize) -> Arc<Vec<i64>> {
    let lock = HURWITZ_TABLE.get_or_init(|| RwLock::new(Arc::new(vec![0])));
    {
        let cur = lock.read().expect("hurwitz table poisoned");
        if cur.len() > d_max {
            return cur.clone();
        }
    }
    let mut guard = lock.write().expect("hurwitz table poisoned");
    if guard.len() > d_max {
        return guard.clone();
    }
    let size = d_max.max(guard.len() * 3 / 2) + 1;
    let table = Arc::new(build_hurwitz6(size - 1));
    *guard = table.clone();
    table
}

fn build_hurwitz6(d_max: usize) -> Vec<i64> {
    let mut h = vec![0i64; d_max + 1];
    let d_max = d_max as i64;
    let mut a: i64 = 1;
    while 3 * a * a <= d_max {
        for b in -a..=a {
            let mut c = a;
            loop {
                let d = 4 * a * c - b * b;
                if d > d_max {
                    break;
                }
                h[d as usize] += form_weight(a as u64, b, c as u64);
                c += 1;
            }
        }
        a += 1;
    }
    h
}

fn check_trace_args(p: u64, k: i64) -> Result<()> {
    if p <= 3 || !modp::is_prime(p) {
        return Err(Error::InvalidLevel {
            p,
            reason: "trace formula implemented for primes p > 3".into(),
        });
    }
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidWeight {
            k,
            reason: "cusp forms are computed in even weight >= 2".into(),
        });
    }
    Ok(())
}

fn legendre(a: i64, p: u64) -> i64 {
    let a = a.rem_euclid(p as i64) as u64;
    if a == 0 {
        return 0;
    }
    let mut r = 1u64;
    let mut base = a;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

/// The class-number weight `w(t, n)` of the elliptic term (units of 1/6).
fn elliptic_weight(p: u64, n: u64, t: u64, h6: impl Fn(u64) -> i64) -> i64 {
    let d = 4 * n - t * t;
    let p2 = p * p;
    let h = h6(d);
    let hp = if d.is_multiple_of(p2) { h6(d / p2) } else { 0 };
    let p_divides_t = t.is_multiple_of(p);
    let mu0 = if !n.is_multiple_of(p) {
        1 + legendre(-(d as i64), p)
    } else if p_divides_t {
        0
    } else {
        1
    };
    let mu1 = if p_divides_t { 0 } else { p as i64 + 1 };
    mu0 * (h - hp) + mu1 * hp
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

fn integer_sqrt(n: u64) -> u64 {
    let mut s = (n as f64).sqrt() as u64;
    while s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}

/// `Tr T_n` on `S_k(Γ₀(p))`, evaluated directly in exact arithmetic.
pub fn trace_tn(p: u64, k: i64, n: u64) -> Result<Rat> {
    check_trace_args(p, k)?;
    if n == 0 {
        return Err(Error::InvalidArgument("Hecke operators are indexed from 1".into()));
    }
    let kk = k as u32;
    let nb = BigInt::from(n);
    let mut twelve = BigInt::zero();

    let s = integer_sqrt(n);
    if s * s == n && !s.is_multiple_of(p) {
        twelve += nb.pow(kk / 2 - 1) * BigInt::from((k - 1) * (p as i64 + 1));
    }

    let mut t: u64 = 0;
    while t * t < 4 * n {
        let w = elliptic_weight(p, n, t, hurwitz6);
        if w != 0 {
            let mult = if t == 0 { 1 } else { 2 };
            twelve -= gegenbauer(k, &BigInt::from(t), &nb) * BigInt::from(w * mult);
        }
        t += 1;
    }

    for d in divisors(n) {
        let e = d.min(n / d);
        let c = (d % p != 0) as i64 + !(n / d).is_multiple_of(p) as i64;
        twelve -= BigInt::from(e).pow(kk - 1) * BigInt::from(6 * c);
    }

    if k == 2 {
        let s1: u64 = divisors(n).into_iter().filter(|d| !(n / d).is_multiple_of(p)).sum();
        twelve += BigInt::from(12 * s1);
    }

    let (q, r) = twelve.div_rem(&BigInt::from(12));
    if !r.is_zero() {
        return Err(Error::Inconsistent(format!(
            "trace of T_{n} on S_{k}({p}) is not integral"
        )));
    }
    Ok(Rat::from_integer(q))
}

/// `P_k(t, n)`: coefficient of `x^{k-2}` in `1/(1 - t x + n x²)`.
pub fn gegenbauer(k: i64, t: &BigInt, n: &BigInt) -> BigInt {
    let mut prev = BigInt::zero();
    let mut cur = BigInt::one();
    for _ in 2..k {
        let next = t * &cur - n * &prev;
        prev = std::mem::replace(&mut cur, next);
    }
    cur
}

/// `Tr(T_m T_n) = Σ_{d | gcd(m,n), p ∤ d} d^{k-1} Tr T_{mn/d²}`.
pub fn trace_product(p: u64, k: i64, m: u64, n: u64) -> Result<Rat> {
    check_trace_args(p, k)?;
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("Hecke operators are indexed from 1".into()));
    }
    let g = m.gcd(&n);
    let mut acc = Rat::zero();
    for d in divisors(g) {
        if d % p == 0 {
            continue;
        }
        let w = Rat::from_integer(BigInt::from(d).pow(k as u32 - 1));
        acc += w * trace_tn(p, k, m * n / (d * d))?;
    }
    Ok(acc)
}

/// `Tr T_n` on `S_k(Γ₀(p))` for `1 ≤ n ≤ N`.
#[derive(Clone, Debug)]
pub struct TraceTable {
    pub p: u64,
    pub k: i64,
    traces: Vec<BigInt>,
}

impl TraceTable {
    /// Computes all traces up to `n_max` by multimodular evaluation.
    pub fn compute(p: u64, k: i64, n_max: usize) -> Result<Self> {
        check_trace_args(p, k)?;
        let n_max = n_max.max(1);
        let h6 = hurwitz6_table(4 * n_max);
        let weights = elliptic_weights(p, n_max, &h6);
        let bits = trace_bound_bits(p, k, n_max, &weights);
        let nprimes = modp::primes_for_bits(bits + 4.0);
        let primes: Vec<Prime> = (0..nprimes).map(pool_prime).collect();
        let residues = exec::map_slice(&primes, |q| twelve_traces_mod(p, k, n_max, q, &weights));
        let twelve = BigInt::from(12);
        let mut traces = Vec::with_capacity(n_max + 1);
        traces.push(BigInt::zero());
        for n in 1..=n_max {
            let mut crt = Crt::new();
            for (q, r) in primes.iter().zip(&residues) {
                crt.push(q, r[n]);
            }
            let (t, rem) = crt.symmetric().div_rem(&twelve);
            if !rem.is_zero() {
                return Err(Error::Inconsistent(format!(
                    "trace of T_{n} on S_{k}({p}) is not integral"
                )));
            }
            traces.push(t);
        }
        Ok(TraceTable { p, k, traces })
    }

    /// Largest `n` covered.
    pub fn n_max(&self) -> usize {
        self.traces.len() - 1
    }

    /// `Tr T_n` as an integer.
    pub fn trace(&self, n: usize) -> &BigInt {
        assert!(n >= 1 && n <= self.n_max(), "trace index {n} outside table");
        &self.traces[n]
    }

    /// `Tr T_n` as a rational, per the table contract.
    pub fn trace_rat(&self, n: usize) -> Rat {
        Rat::from_integer(self.trace(n).clone())
    }

    /// `Tr(T_m T_n)` from the table; needs `m·n ≤ N`.
    pub fn product(&self, m: usize, n: usize) -> BigInt {
        let g = m.gcd(&n);
        let mut acc = BigInt::zero();
        for d in divisors(g as u64) {
            if d % self.p == 0 {
                continue;
            }
            let d = d as usize;
            acc += BigInt::from(d).pow(self.k as u32 - 1) * self.trace(m * n / (d * d));
        }
        acc
    }

    /// All traces reduced modulo `q`, index 0 unused.
    pub fn reduce(&self, q: &Prime) -> Vec<u64> {
        self.traces.iter().map(|t| q.reduce(t)).collect()
    }
}

/// Per `n`, the list of `(t², multiplicity·w(t, n))` with nonzero weight.
struct EllipticWeights {
    offsets: Vec<usize>,
    entries: Vec<(u64, i64)>,
    totals: Vec<i64>,
}

fn elliptic_weights(p: u64, n_max: usize, h6: &[i64]) -> EllipticWeights {
    let mut offsets = Vec::with_capacity(n_max + 2);
    let mut entries = Vec::new();
    let mut totals = Vec::with_capacity(n_max + 1);
    offsets.push(0);
    offsets.push(0);
    totals.push(0);
    for n in 1..=n_max as u64 {
        let mut total = 0i64;
        let mut t = 0u64;
        while t * t < 4 * n {
            let w = elliptic_weight(p, n, t, |d| h6[d as usize]);
            if w != 0 {
                let mult = if t == 0 { 1 } else { 2 };
                entries.push((t * t, w * mult));
                total += w * mult;
            }
            t += 1;
        }
        totals.push(total);
        offsets.push(entries.len());
    }
    EllipticWeights {
        offsets,
        entries,
        totals,
    }
}

/// log2 of a bound for `|12·Tr T_n|`, `n ≤ N`, using
/// `|P_k(t,n)| ≤ (k-1)·n^{(k-2)/2}` and `min(d, n/d) ≤ √n`.
fn trace_bound_bits(p: u64, k: i64, n_max: usize, w: &EllipticWeights) -> f64 {
    let mut best: f64 = 0.0;
    for n in 1..=n_max {
        let nf = n as f64;
        let dn = 2.0 * nf.sqrt() + 1.0;
        let inner = (k as f64 - 1.0) * (p as f64 + 1.0 + w.totals[n] as f64) + 12.0 * dn * nf.sqrt();
        let main = inner.log2() + (k as f64 - 2.0) / 2.0 * nf.log2();
        let extra = (12.0 * nf * dn).log2();
        let b = main.max(extra) + 1.0;
        best = best.max(b);
    }
    best + 1.0
}

fn binomial(n: i64, r: i64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

fn twelve_traces_mod(p: u64, k: i64, n_max: usize, q: &Prime, w: &EllipticWeights) -> Vec<u64> {
    let h = ((k - 2) / 2) as usize;
    // P_k(t, n) = Σ_j (-1)^j C(k-2-j, j) n^j (t²)^{h-j}
    let binoms: Vec<u64> = (0..=h as i64)
        .map(|j| {
            let c = q.reduce(&binomial(k - 2 - j, j));
            let c = if j % 2 == 1 { q.neg(c) } else { c };
            q.to_mont(c)
        })
        .collect();
    let twelve_identity = q.to_mont(((k - 1) as u64 * (p + 1)) % q.value());
    let chunk = 256usize;
    let nchunks = n_max.div_ceil(chunk);
    let parts = exec::map_range(nchunks, |ci| {
        let lo = ci * chunk + 1;
        let hi = ((ci + 1) * chunk).min(n_max);
        let mut out = Vec::with_capacity(hi + 1 - lo);
        let mut sums = vec![0u64; h + 1];
        for n in lo..=hi {
            sums.iter_mut().for_each(|s| *s = 0);
            for &(t2, wt) in &w.entries[w.offsets[n]..w.offsets[n + 1]] {
                let x = q.to_mont(t2 % q.value());
                let mut acc = q.to_mont(q.from_i64(wt));
                for s in sums.iter_mut() {
                    *s = q.add(*s, acc);
                    acc = q.mont_mul(acc, x);
                }
            }
            let nm = q.to_mont(n as u64 % q.value());
            let mut npow = q.to_mont(1);
            let mut elliptic = 0u64;
            for j in 0..=h {
                elliptic = q.add(elliptic, q.mont_mul(q.mont_mul(binoms[j], npow), sums[h - j]));
                npow = q.mont_mul(npow, nm);
            }
            let mut total = q.neg(q.from_mont(elliptic));

            let nn = n as u64;
            let s = integer_sqrt(nn);
            if s * s == nn && !s.is_multiple_of(p) {
                let v = q.mont_mul(twelve_identity, q.to_mont(q.pow(nn, (k / 2 - 1) as u64)));
                total = q.add(total, q.from_mont(v));
            }
            for d in divisors(nn) {
                let c = (d % p != 0) as u64 + !(nn / d).is_multiple_of(p) as u64;
                if c == 0 {
                    continue;
                }
                let e = d.min(nn / d);
                let v = q.mul(q.pow(e, (k - 1) as u64), 6 * c);
                total = q.sub(total, v);
            }
            if k == 2 {
                for d in divisors(nn) {
                    if !(nn / d).is_multiple_of(p) {
                        total = q.add(total, q.mul(d % q.value(), 12));
                    }
                }
            }
            out.push(total);
        }
        out
    });
    let mut res = Vec::with_capacity(n_max + 1);
    res.push(0);
    for part in parts {
        res.extend(part);
    }
    res
}

type TraceCache = RwLock<HashMap<(u64, i64), Arc<TraceTable>>>;
static TRACE_CACHE: OnceLock<TraceCache> = OnceLock::new();

/// Shared trace table for `(p, k)` covering at least `1..=n_min`.
pub fn trace_table(p: u64, k: i64, n_min: usize) -> Result<Arc<TraceTable>> {
    let cache = TRACE_CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    let previous = {
        let map = cache.read().expect("trace cache poisoned");
        match map.get(&(p, k)) {
            Some(t) if t.n_max() >= n_min => return Ok(t.clone()),
            Some(t) => t.n_max(),
            None => 0,
        }
    };
    let n = n_min.max(previous * 3 / 2);
    let table = Arc::new(TraceTable::compute(p, k, n)?);
    let mut map = cache.write().expect("trace cache poisoned");
    let entry = map.entry((p, k)).or_insert_with(|| table.clone());
    if entry.n_max() < table.n_max() {
        *entry = table.clone();
    }
    Ok(entry.clone())
}

pub(crate) fn clear_trace_cache() {
    if let Some(cache) = TRACE_CACHE.get() {
        cache.write().expect("trace cache poisoned").clear();
    }
}

/// Reduced-row-echelon basis of `S_k(Γ₀(p))` to precision `prec_cap`,
/// generated by the series `Σ_n Tr(T_m T_n) qⁿ` for `m = 1, 2, 3, …`.
pub fn cusp_space(p: u64, k: i64, prec_cap: i64) -> Result<EchelonBasis> {
    crate::spaces::cusp_basis(p, k, prec_cap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{eta_quotient_expand, EtaQuotient};
    use crate::qseries::{rat, rat_int};

    #[test]
    fn hurwitz_small_values() {
        let cases = [
            (0, rat(-1, 12)),
            (3, rat(1, 3)),
            (4, rat(1, 2)),
            (7, rat(1, 1)),
            (8, rat(1, 1)),
            (12, rat(4, 3)),
            (15, rat(2, 1)),
            (16, rat(3, 2)),
            (27, rat(4, 3)),
            (28, rat(2, 1)),
            (5, rat(0, 1)),
        ];
        for (m, h) in cases {
            assert_eq!(hurwitz(m).unwrap(), h, "H({m})");
        }
        assert!(hurwitz(-3).is_err());
    }

    #[test]
    fn hurwitz_table_matches_direct_enumeration() {
        let t = hurwitz6_table(2000);
        for d in 1..=2000u64 {
            assert_eq!(t[d as usize], hurwitz6(d), "D = {d}");
        }
    }

    #[test]
    fn kronecker_hurwitz_class_number_relation() {
        // Σ_{t² ≤ 4n} H(4n - t²) = 2σ(n) - Σ_{d|n} min(d, n/d)
        for n in 1..150i64 {
            let mut lhs = Rat::zero();
            let mut t = -2 * integer_sqrt(n as u64) as i64 - 1;
            while t <= 2 * integer_sqrt(n as u64) as i64 + 1 {
                if t * t <= 4 * n {
                    lhs += hurwitz(4 * n - t * t).unwrap();
                }
                t += 1;
            }
            let ds = divisors(n as u64);
            let sigma: u64 = ds.iter().sum();
            let mins: u64 = ds.iter().map(|&d| d.min(n as u64 / d)).sum();
            assert_eq!(lhs, rat_int(2 * sigma as i64 - mins as i64), "n = {n}");
        }
    }

    #[test]
    fn gegenbauer_polynomials() {
        let t = BigInt::from(3);
        let n = BigInt::from(5);
        assert_eq!(gegenbauer(2, &t, &n), BigInt::from(1));
        assert_eq!(gegenbauer(3, &t, &n), BigInt::from(3));
        assert_eq!(gegenbauer(4, &t, &n), BigInt::from(9 - 5));
        assert_eq!(gegenbauer(6, &t, &n), BigInt::from(81 - 3 * 9 * 5 + 25));
    }

    #[test]
    fn dimension_at_identity() {
        assert_eq!(trace_tn(11, 2, 1).unwrap(), rat_int(1));
        assert_eq!(trace_tn(17, 4, 1).unwrap(), rat_int(4));
        assert_eq!(trace_tn(17, 12, 1).unwrap(), rat_int(16));
        assert_eq!(trace_tn(5, 4, 1).unwrap(), rat_int(1));
        assert_eq!(trace_tn(13, 2, 1).unwrap(), rat_int(0));
    }

    #[test]
    fn level_eleven_weight_two_matches_eta_product() {
        let f = eta_quotient_expand(&EtaQuotient::new(vec![(1, 2), (11, 2)]), 51).unwrap();
        for n in 1..=50u64 {
            assert_eq!(trace_tn(11, 2, n).unwrap(), f.coeff(n as i64).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn level_five_weight_four_matches_eta_product() {
        let f = eta_quotient_expand(&EtaQuotient::new(vec![(1, 4), (5, 4)]), 41).unwrap();
        for n in 1..=40u64 {
            assert_eq!(trace_tn(5, 4, n).unwrap(), f.coeff(n as i64).unwrap(), "n = {n}");
        }
    }

    #[test]
    fn hecke_products() {
        for n in 1..8 {
            assert_eq!(trace_product(11, 2, 1, n).unwrap(), trace_tn(11, 2, n).unwrap());
        }
        let t4 = trace_tn(11, 2, 4).unwrap();
        let t1 = trace_tn(11, 2, 1).unwrap();
        assert_eq!(trace_product(11, 2, 2, 2).unwrap(), t4 + t1 * rat_int(2));
        assert_eq!(trace_product(11, 2, 2, 3).unwrap(), rat_int(2));
    }

    #[test]
    fn bulk_table_matches_direct_formula() {
        for (p, k) in [(11u64, 2i64), (11, 12), (17, 6), (37, 20), (5, 30)] {
            let t = TraceTable::compute(p, k, 120).unwrap();
            for n in (1..=120usize).step_by(7).chain([1, 4, 49, 120]) {
                assert_eq!(t.trace_rat(n), trace_tn(p, k, n as u64).unwrap(), "p={p} k={k} n={n}");
            }
            assert_eq!(t.product(3, 4), trace_product(p, k, 3, 4).unwrap().to_integer());
        }
    }

    #[test]
    fn bulk_table_sequential_and_parallel_agree() {
        exec::set_parallel(false);
        let a = TraceTable::compute(19, 10, 300).unwrap();
        exec::set_parallel(true);
        let b = TraceTable::compute(19, 10, 300).unwrap();
        assert_eq!(a.traces, b.traces);
    }

    #[test]
    fn argument_checks() {
        assert!(trace_tn(9, 2, 1).is_err());
        assert!(trace_tn(11, 3, 1).is_err());
        assert!(trace_tn(11, 2, 0).is_err());
    }
}
