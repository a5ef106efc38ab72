//! Truncated Laurent series in one and two variables with exact rational
//! coefficients.
//!
//! A [`QSeries`] stores the dense coefficient window `[min_exp, prec_cap)`.
//! Coefficients below `min_exp` are known to vanish; coefficients at or above
//! `prec_cap` are unknown. Every operation computes the window its inputs
//! justify and nothing more:
//!
//! * sum: `[min(a.min, b.min), min(a.cap, b.cap))`
//! * product: `[a.min + b.min, min(a.min + b.cap, b.min + a.cap))`
//! * inverse: `[-a.min, -a.min + (a.cap - a.min))`
//! * `q -> q^d`: `[d·a.min, d·a.cap)`

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact rational number, always normalized.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: impl Into<BigInt>) -> Rat {
    Rat::from_integer(n.into())
}

/// Serialized form `num/den`, denominator omitted when it is 1.
pub fn rat_to_string(r: &Rat) -> String {
    r.to_string()
}

pub fn rat_from_str(s: &str) -> Result<Rat> {
    s.trim()
        .parse::<Rat>()
        .map_err(|_| Error::InvalidArgument(format!("not a rational number: {s:?}")))
}

/// Serde adapter storing a [`Rat`] as its `num/den` string.
pub mod rat_serde {
    use super::{rat_from_str, rat_to_string, Rat};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        rat_from_str(&s).map_err(serde::de::Error::custom)
    }
}

/// Truncated Laurent series `Σ_{min_exp ≤ n < prec_cap} c_n q^n + O(q^prec_cap)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    min_exp: i64,
    prec_cap: i64,
    coeffs: Vec<Rat>,
}

impl QSeries {
    /// Builds a series from its dense window; `coeffs[i]` is the coefficient of `q^(min_exp+i)`.
    pub fn new(min_exp: i64, coeffs: Vec<Rat>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::IncompatibleWindows);
        }
        Ok(QSeries {
            min_exp,
            prec_cap: min_exp + coeffs.len() as i64,
            coeffs,
        })
    }

    pub fn from_ints(min_exp: i64, coeffs: &[i64]) -> Result<Self> {
        Self::new(min_exp, coeffs.iter().map(|&c| rat_int(c)).collect())
    }

    pub fn from_bigints(min_exp: i64, coeffs: Vec<BigInt>) -> Result<Self> {
        Self::new(min_exp, coeffs.into_iter().map(Rat::from_integer).collect())
    }

    /// The zero series on `[min_exp, prec_cap)`.
    pub fn zero(min_exp: i64, prec_cap: i64) -> Result<Self> {
        if prec_cap <= min_exp {
            return Err(Error::IncompatibleWindows);
        }
        Ok(QSeries {
            min_exp,
            prec_cap,
            coeffs: vec![Rat::zero(); (prec_cap - min_exp) as usize],
        })
    }

    /// `c·q^e` known up to `prec_cap`.
    pub fn monomial(e: i64, c: Rat, prec_cap: i64) -> Result<Self> {
        let mut s = Self::zero(e, prec_cap)?;
        s.coeffs[0] = c;
        Ok(s)
    }

    /// The constant 1 known up to `prec_cap`.
    pub fn one(prec_cap: i64) -> Result<Self> {
        Self::monomial(0, Rat::one(), prec_cap)
    }

    pub fn min_exp(&self) -> i64 {
        self.min_exp
    }

    pub fn prec_cap(&self) -> i64 {
        self.prec_cap
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    /// Coefficient of `q^n`; zero below the window, an error at or above the cap.
    pub fn coeff(&self, n: i64) -> Result<Rat> {
        self.coeff_ref(n).map(|c| c.cloned().unwrap_or_else(Rat::zero))
    }

    /// Like [`coeff`](Self::coeff) but borrows; `None` means the coefficient is known to be zero.
    pub fn coeff_ref(&self, n: i64) -> Result<Option<&Rat>> {
        if n >= self.prec_cap {
            return Err(Error::CoefficientUnavailable {
                exp: n,
                min: self.min_exp,
                cap: self.prec_cap,
            });
        }
        if n < self.min_exp {
            return Ok(None);
        }
        Ok(Some(&self.coeffs[(n - self.min_exp) as usize]))
    }

    /// Lowest exponent with a nonzero coefficient; `None` when the window is
    /// identically zero (the valuation is then unknown, at least `prec_cap`).
    pub fn valuation(&self) -> Option<i64> {
        self.coeffs
            .iter()
            .position(|c| !c.is_zero())
            .map(|i| self.min_exp + i as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Same series with the window moved to `[min_exp, prec_cap)`.
    ///
    /// Lowering `min_exp` pads with known zeros; raising it requires the
    /// dropped coefficients to vanish. `prec_cap` may only shrink.
    pub fn rewindow(&self, min_exp: i64, prec_cap: i64) -> Result<Self> {
        if prec_cap > self.prec_cap || prec_cap <= min_exp {
            return Err(Error::IncompatibleWindows);
        }
        if min_exp > self.min_exp {
            let dropped_nonzero = (self.min_exp..min_exp.min(self.prec_cap))
                .any(|n| !self.coeffs[(n - self.min_exp) as usize].is_zero());
            if dropped_nonzero {
                return Err(Error::IncompatibleWindows);
            }
        }
        let coeffs = (min_exp..prec_cap)
            .map(|n| {
                if n < self.min_exp {
                    Rat::zero()
                } else {
                    self.coeffs[(n - self.min_exp) as usize].clone()
                }
            })
            .collect();
        Ok(QSeries {
            min_exp,
            prec_cap,
            coeffs,
        })
    }

    /// Lowers the cap to `prec_cap` (no-op when it is already lower).
    pub fn truncate(&self, prec_cap: i64) -> Result<Self> {
        self.rewindow(self.min_exp, prec_cap.min(self.prec_cap))
    }

    /// Multiplication by `q^s`.
    pub fn shift(&self, s: i64) -> Self {
        QSeries {
            min_exp: self.min_exp + s,
            prec_cap: self.prec_cap + s,
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        QSeries {
            min_exp: self.min_exp,
            prec_cap: self.prec_cap,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        QSeries {
            min_exp: self.min_exp,
            prec_cap: self.prec_cap,
            coeffs: self.coeffs.iter().map(|x| -x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        qs_add(self, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        qs_add(self, &other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        qs_mul(self, other)
    }

    /// Numerators over a common denominator: `self = (Σ nums[i] q^(min+i)) / den`.
    pub fn to_common_denominator(&self) -> (Vec<BigInt>, BigInt) {
        let den = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums = self
            .coeffs
            .iter()
            .map(|c| c.numer() * (&den / c.denom()))
            .collect();
        (nums, den)
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = self.min_exp + i as i64;
            let (sign, abs) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            match e {
                0 => write!(f, "{abs}")?,
                _ if abs.is_one() => write!(f, "q^{e}")?,
                _ => write!(f, "{abs}*q^{e}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.prec_cap)
    }
}

/// Coefficientwise sum on the common window.
pub fn qs_add(a: &QSeries, b: &QSeries) -> Result<QSeries> {
    let min_exp = a.min_exp.min(b.min_exp);
    let prec_cap = a.prec_cap.min(b.prec_cap);
    if prec_cap <= min_exp {
        return Err(Error::IncompatibleWindows);
    }
    fn get(s: &QSeries, n: i64) -> Option<&Rat> {
        if n < s.min_exp {
            None
        } else {
            Some(&s.coeffs[(n - s.min_exp) as usize])
        }
    }
    let coeffs = (min_exp..prec_cap)
        .map(|n| match (get(a, n), get(b, n)) {
            (Some(x), Some(y)) => x + y,
            (Some(x), None) | (None, Some(x)) => x.clone(),
            (None, None) => Rat::zero(),
        })
        .collect();
    Ok(QSeries {
        min_exp,
        prec_cap,
        coeffs,
    })
}

/// Cauchy product with the pessimistic window rule.
pub fn qs_mul(a: &QSeries, b: &QSeries) -> QSeries {
    let min_exp = a.min_exp + b.min_exp;
    let prec_cap = (a.min_exp + b.prec_cap).min(b.min_exp + a.prec_cap);
    let len = (prec_cap - min_exp) as usize;
    let (an, ad) = a.to_common_denominator();
    let (bn, bd) = b.to_common_denominator();
    let mut acc = vec![BigInt::zero(); len];
    for (i, x) in an.iter().enumerate().take(len) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in bn.iter().enumerate().take(len - i) {
            if !y.is_zero() {
                acc[i + j] += x * y;
            }
        }
    }
    let den = ad * bd;
    QSeries {
        min_exp,
        prec_cap,
        coeffs: acc
            .into_iter()
            .map(|n| Rat::new(n, den.clone()))
            .collect(),
    }
}

/// Multiplicative inverse; the coefficient at `min_exp` must be nonzero.
pub fn qs_inv(a: &QSeries) -> Result<QSeries> {
    let lead = &a.coeffs[0];
    if lead.is_zero() {
        return Err(Error::NonInvertible);
    }
    let len = a.coeffs.len();
    let lead_inv = lead.recip();
    let mut out: Vec<Rat> = Vec::with_capacity(len);
    out.push(lead_inv.clone());
    for n in 1..len {
        let mut s = Rat::zero();
        for i in 1..=n {
            let ai = &a.coeffs[i];
            if !ai.is_zero() {
                s += ai * &out[n - i];
            }
        }
        out.push(-(s * &lead_inv));
    }
    Ok(QSeries {
        min_exp: -a.min_exp,
        prec_cap: -a.min_exp + len as i64,
        coeffs: out,
    })
}

/// Substitution `q -> q^d`.
pub fn qs_vop(a: &QSeries, d: i64) -> Result<QSeries> {
    if d < 1 {
        return Err(Error::InvalidArgument(format!("q -> q^d needs d >= 1, got {d}")));
    }
    let min_exp = a.min_exp * d;
    let prec_cap = a.prec_cap * d;
    let mut coeffs = vec![Rat::zero(); (prec_cap - min_exp) as usize];
    for (i, c) in a.coeffs.iter().enumerate() {
        coeffs[i * d as usize] = c.clone();
    }
    Ok(QSeries {
        min_exp,
        prec_cap,
        coeffs,
    })
}

/// Exact coefficient of `q^n`.
pub fn qs_coeff(a: &QSeries, n: i64) -> Result<Rat> {
    a.coeff(n)
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SeriesRepr {
    min_exp: i64,
    prec_cap: i64,
    coeffs: Vec<String>,
}

impl Serialize for QSeries {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            min_exp: self.min_exp,
            prec_cap: self.prec_cap,
            coeffs: self.coeffs.iter().map(rat_to_string).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for QSeries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SeriesRepr::deserialize(d)?;
        let coeffs = repr
            .coeffs
            .iter()
            .map(|c| rat_from_str(c))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        if repr.prec_cap - repr.min_exp != coeffs.len() as i64 {
            return Err(D::Error::custom("coefficient count does not match the window"));
        }
        QSeries::new(repr.min_exp, coeffs).map_err(D::Error::custom)
    }
}

/// Truncated series in two variables: row `z` (for `z_min ≤ z < z_cap`) is the
/// coefficient of `q_z^z`, itself a series in `q_τ`. All rows share one τ-window.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BiSeries {
    z_min: i64,
    z_cap: i64,
    rows: Vec<QSeries>,
}

impl BiSeries {
    pub fn z_min(&self) -> i64 {
        self.z_min
    }

    pub fn z_cap(&self) -> i64 {
        self.z_cap
    }

    /// τ-window shared by every row.
    pub fn tau_window(&self) -> (i64, i64) {
        (self.rows[0].min_exp, self.rows[0].prec_cap)
    }

    pub fn rows(&self) -> &[QSeries] {
        &self.rows
    }

    /// Row of `q_z^z`; zero below `z_min`, an error at or above `z_cap`.
    pub fn row(&self, z: i64) -> Result<QSeries> {
        if z >= self.z_cap {
            return Err(Error::CoefficientUnavailable {
                exp: z,
                min: self.z_min,
                cap: self.z_cap,
            });
        }
        if z < self.z_min {
            let (lo, hi) = self.tau_window();
            return QSeries::zero(lo, hi);
        }
        Ok(self.rows[(z - self.z_min) as usize].clone())
    }

    /// Coefficient of `q_z^z q_τ^t`.
    pub fn coeff(&self, z: i64, t: i64) -> Result<Rat> {
        if z >= self.z_cap {
            return Err(Error::CoefficientUnavailable {
                exp: z,
                min: self.z_min,
                cap: self.z_cap,
            });
        }
        if z < self.z_min {
            return Ok(Rat::zero());
        }
        self.rows[(z - self.z_min) as usize].coeff(t)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(QSeries::is_zero)
    }

    /// Positions `(z, t)` of nonzero coefficients.
    pub fn nonzero_positions(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            for (j, c) in row.coeffs.iter().enumerate() {
                if !c.is_zero() {
                    out.push((self.z_min + i as i64, row.min_exp + j as i64));
                }
            }
        }
        out
    }

    /// Restriction to `z < z_cap` and `t < tau_cap`.
    pub fn truncate(&self, z_cap: i64, tau_cap: i64) -> Result<Self> {
        let z_cap = z_cap.min(self.z_cap);
        if z_cap <= self.z_min {
            return Err(Error::IncompatibleWindows);
        }
        let rows = self.rows[..(z_cap - self.z_min) as usize]
            .iter()
            .map(|r| r.truncate(tau_cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(BiSeries {
            z_min: self.z_min,
            z_cap,
            rows,
        })
    }

    /// Every row multiplied by a series in `q_τ`.
    pub fn mul_tau(&self, s: &QSeries) -> Self {
        BiSeries {
            z_min: self.z_min,
            z_cap: self.z_cap,
            rows: self.rows.iter().map(|r| qs_mul(r, s)).collect(),
        }
    }

    /// The separable product `a(q_z)·b(q_τ)`.
    pub fn outer(a: &QSeries, b: &QSeries) -> Self {
        BiSeries {
            z_min: a.min_exp,
            z_cap: a.prec_cap,
            rows: a.coeffs.iter().map(|c| b.scale(c)).collect(),
        }
    }
}

fn common_tau_window<'a>(rows: impl Iterator<Item = &'a QSeries>) -> Result<(i64, i64)> {
    let mut lo = i64::MAX;
    let mut hi = i64::MAX;
    for r in rows {
        lo = lo.min(r.min_exp);
        hi = hi.min(r.prec_cap);
    }
    if hi <= lo {
        return Err(Error::IncompatibleWindows);
    }
    Ok((lo, hi))
}

/// Assembles a two-variable series from rows keyed by their `q_z` exponent.
///
/// The z-window runs from the smallest to one past the largest key; absent
/// rows in between are zero. Rows are brought to the common τ-window.
pub fn bi_combine(rows: &BTreeMap<i64, QSeries>) -> Result<BiSeries> {
    let (&z_min, _) = rows.iter().next().ok_or(Error::IncompatibleWindows)?;
    let (&z_last, _) = rows.iter().next_back().ok_or(Error::IncompatibleWindows)?;
    let (lo, hi) = common_tau_window(rows.values())?;
    let out = (z_min..=z_last)
        .map(|z| match rows.get(&z) {
            Some(r) => r.rewindow(lo, hi),
            None => QSeries::zero(lo, hi),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BiSeries {
        z_min,
        z_cap: z_last + 1,
        rows: out,
    })
}

/// Product with a series acting in `q_z` (convolution over rows).
pub fn bi_mul(f: &BiSeries, s: &QSeries) -> Result<BiSeries> {
    let z_min = f.z_min + s.min_exp;
    let z_cap = (f.z_min + s.prec_cap).min(s.min_exp + f.z_cap);
    let (lo, hi) = f.tau_window();
    let rows = (z_min..z_cap)
        .map(|z| {
            let mut acc = vec![Rat::zero(); (hi - lo) as usize];
            for (i, c) in s.coeffs.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let zr = z - (s.min_exp + i as i64);
                if zr < f.z_min || zr >= f.z_cap {
                    continue;
                }
                for (a, x) in acc.iter_mut().zip(&f.rows[(zr - f.z_min) as usize].coeffs) {
                    if !x.is_zero() {
                        *a += c * x;
                    }
                }
            }
            QSeries::new(lo, acc)
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Err(Error::IncompatibleWindows);
    }
    Ok(BiSeries {
        z_min,
        z_cap,
        rows,
    })
}

fn bi_zip(f: &BiSeries, g: &BiSeries, sign: i64) -> Result<BiSeries> {
    let z_min = f.z_min.min(g.z_min);
    let z_cap = f.z_cap.min(g.z_cap);
    if z_cap <= z_min {
        return Err(Error::IncompatibleWindows);
    }
    let (lo, hi) = common_tau_window([f.rows[0].clone(), g.rows[0].clone()].iter())?;
    let rows = (z_min..z_cap)
        .map(|z| {
            let a = f.row(z)?.rewindow(lo, hi)?;
            let b = g.row(z)?.rewindow(lo, hi)?;
            if sign < 0 {
                a.sub(&b)
            } else {
                a.add(&b)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BiSeries {
        z_min,
        z_cap,
        rows,
    })
}

pub fn bi_sub(f: &BiSeries, g: &BiSeries) -> Result<BiSeries> {
    bi_zip(f, g, -1)
}

pub fn bi_add(f: &BiSeries, g: &BiSeries) -> Result<BiSeries> {
    bi_zip(f, g, 1)
}
