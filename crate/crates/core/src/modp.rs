//! Word-size prime fields, Chinese remaindering and rational reconstruction.
//!
//! Everything heavy in this crate (bulk Hecke traces, echelon forms of
//! trace matrices) runs modulo a pool of 62-bit primes and is lifted back to
//! exact integers or rationals afterwards. Arithmetic inside hot loops uses
//! Montgomery form; the public helpers take and return ordinary residues.

use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// An odd prime below 2^62 with precomputed Montgomery constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Prime {
    p: u64,
    /// -p^{-1} mod 2^64
    neg_inv: u64,
    /// 2^128 mod p
    r2: u64,
}

impl Prime {
    pub fn new(p: u64) -> Self {
        assert!(p % 2 == 1 && p < (1 << 62), "Montgomery modulus must be odd and < 2^62");
        let mut inv: u64 = p;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r1 = ((u64::MAX % p) + 1) % p;
        let r2 = ((r1 as u128 * r1 as u128) % p as u128) as u64;
        Prime {
            p,
            neg_inv: inv.wrapping_neg(),
            r2,
        }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.p
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.p as u128) >> 64) as u64;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    /// Product of two values already in Montgomery form.
    #[inline]
    pub fn mont_mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline]
    pub fn to_mont(&self, a: u64) -> u64 {
        self.mont_mul(a % self.p, self.r2)
    }

    #[inline]
    pub fn from_mont(&self, a: u64) -> u64 {
        self.redc(a as u128)
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    /// Plain (non-Montgomery) product; used outside hot loops.
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a nonzero plain residue.
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(!a.is_multiple_of(self.p));
        self.pow(a, self.p - 2)
    }

    pub fn from_i64(&self, a: i64) -> u64 {
        let r = a.rem_euclid(self.p as i64);
        r as u64
    }

    /// Reduction of an arbitrary integer.
    pub fn reduce(&self, x: &BigInt) -> u64 {
        let (sign, digits) = x.to_u64_digits();
        let mut r: u128 = 0;
        let p = self.p as u128;
        for &d in digits.iter().rev() {
            r = ((r << 64) | d as u128) % p;
        }
        let r = r as u64;
        if sign == Sign::Minus {
            self.neg(r)
        } else {
            r
        }
    }

    /// Reduction of a rational; `None` when the denominator vanishes mod p.
    pub fn reduce_ratio(&self, num: &BigInt, den: &BigInt) -> Option<u64> {
        let d = self.reduce(den);
        if d == 0 {
            return None;
        }
        Some(self.mul(self.reduce(num), self.inv(d)))
    }
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(sp) {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    // Deterministic for all n < 3.3e24.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primality test for small integers (levels, divisors).
pub fn is_prime(n: u64) -> bool {
    is_prime_u64(n)
}

static POOL: OnceLock<Mutex<Vec<Prime>>> = OnceLock::new();

/// The `i`-th prime of the fixed pool (descending from 2^62).
pub fn pool_prime(i: usize) -> Prime {
    let pool = POOL.get_or_init(|| Mutex::new(Vec::new()));
    let mut guard = pool.lock().expect("prime pool poisoned");
    if guard.len() <= i {
        let mut candidate = guard
            .last()
            .map(|q| q.value() - 2)
            .unwrap_or((1u64 << 62) - 1);
        while guard.len() <= i + 16 {
            if is_prime_u64(candidate) {
                guard.push(Prime::new(candidate));
            }
            candidate -= 2;
        }
    }
    guard[i]
}

/// log2 of the product of the first `count` pool primes is at least this.
pub const POOL_PRIME_BITS: f64 = 61.99;

/// Number of pool primes whose product exceeds `2^bits`.
pub fn primes_for_bits(bits: f64) -> usize {
    ((bits + 1.0) / POOL_PRIME_BITS).ceil().max(1.0) as usize
}

/// Incremental Chinese remaindering of one value.
#[derive(Clone, Debug)]
pub struct Crt {
    value: BigInt,
    modulus: BigInt,
}

impl Default for Crt {
    fn default() -> Self {
        Crt {
            value: BigInt::zero(),
            modulus: BigInt::one(),
        }
    }
}

impl Crt {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    /// Folds in residue `r` modulo `q`; `q` must be coprime to the current modulus.
    pub fn push(&mut self, q: &Prime, r: u64) {
        let cur = q.reduce(&self.value);
        let diff = q.sub(r, cur);
        if diff != 0 {
            let m_mod = q.reduce(&self.modulus);
            let t = q.mul(diff, q.inv(m_mod));
            self.value += &self.modulus * BigInt::from(t);
        }
        self.modulus *= BigInt::from(q.value());
    }

    /// Representative in [0, M).
    pub fn value(&self) -> &BigInt {
        &self.value
    }

    /// Representative in (-M/2, M/2].
    pub fn symmetric(&self) -> BigInt {
        let half: BigInt = &self.modulus >> 1u32;
        if self.value > half {
            &self.value - &self.modulus
        } else {
            self.value.clone()
        }
    }
}

/// Symmetric representative of `x` modulo `m`.
pub fn symmetric_mod(x: &BigInt, m: &BigInt) -> BigInt {
    let r = x.mod_floor(m);
    let half: BigInt = m >> 1u32;
    if r > half {
        r - m
    } else {
        r
    }
}

/// Smallest `a/b` with `a ≡ b·x (mod m)`, `|a|, b ≤ sqrt(m/2)`.
pub fn rational_reconstruction(x: &BigInt, m: &BigInt) -> Option<(BigInt, BigInt)> {
    let bound = (m >> 1u32).sqrt();
    let (mut r0, mut r1) = (m.clone(), x.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let (q, r) = r0.div_rem(&r1);
        r0 = std::mem::replace(&mut r1, r);
        let t = &t0 - &q * &t1;
        t0 = std::mem::replace(&mut t1, t);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if !r1.gcd(&t1).is_one() {
        return None;
    }
    if t1.is_negative() {
        Some((-r1, -t1))
    } else {
        Some((r1, t1))
    }
}
