//! Zagier duality `a_k(m, n) = -b_{2-k}(n, m)` between the bases of `M♯_k(p)`
//! and `S♯_{2-k}(p)`, together with the constant-term pairing behind it.
//!
//! For `f = f_{k,m}` and `g = g_{2-k,n}` the product lies in `S♯_2(p)`, whose
//! elements have no constant term. Expanding the constant term of `f·g`:
//!
//! ```text
//! CT(f·g) = [m = -n] + a_k(m, n) + b_{2-k}(n, m) + Σ_{-m < i < n} a_k(m, i)·b_{2-k}(n, -i)
//! ```

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::modp;
use crate::qseries::{QSeries, Rat};
use crate::spaces::{genus, Space};
use crate::weak::{coefficient, first_index, weak_basis, WeakBasis};

/// A pair `(m, n)` where `a_k(m, n) ≠ -b_{2-k}(n, m)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub m: i64,
    pub n: i64,
    #[serde(with = "crate::qseries::rat_serde")]
    pub lhs: Rat,
    #[serde(with = "crate::qseries::rat_serde")]
    pub rhs: Rat,
}

/// Result of checking duality on a box of indices (ranges inclusive).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DualityReport {
    pub p: u64,
    pub k: i64,
    pub m_range: (i64, i64),
    pub n_range: (i64, i64),
    pub checked_pairs: usize,
    pub violations: Vec<Violation>,
    /// Pairs where both elements exist and the constant-term identity was checked.
    pub pairings_checked: usize,
    /// Pairs whose product has a nonzero constant term or whose constant term
    /// does not decompose as above.
    pub pairing_failures: Vec<(i64, i64)>,
    /// Indices `m` where exactly one of `f_{k,m}`, `g_{2-k,-m}` should exist but
    /// the computed bases disagree.
    pub complementarity_failures: Vec<i64>,
}

impl DualityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
            && self.pairing_failures.is_empty()
            && self.complementarity_failures.is_empty()
    }
}

/// Constant term `Σ_i f_i·g_{-i}` of `f·g`. Each window must reach past the
/// other's principal part.
pub fn pairing_constant_term(f: &QSeries, g: &QSeries) -> Result<Rat> {
    let (fmin, gmin) = (f.min_exp(), g.min_exp());
    if f.prec_cap() <= -gmin || g.prec_cap() <= -fmin {
        return Err(Error::InsufficientPrecision(
            "series windows do not cover each other's principal parts".into(),
        ));
    }
    let mut acc = Rat::zero();
    for i in fmin..=-gmin {
        let a = f.coeff(i)?;
        if a.is_zero() {
            continue;
        }
        let b = g.coeff(-i)?;
        if !b.is_zero() {
            acc += a * b;
        }
    }
    Ok(acc)
}

/// `Σ_{-m < i < n} a_k(m, i)·b_{2-k}(n, -i)`.
pub fn bruinier_funke_sum(basis_m: &WeakBasis, basis_s: &WeakBasis, m: i64, n: i64) -> Result<Rat> {
    let mut acc = Rat::zero();
    if basis_m.element(m).is_none() || basis_s.element(n).is_none() {
        return Ok(acc);
    }
    for i in -m + 1..n {
        let a = coefficient(basis_m, m, i)?;
        if a.is_zero() {
            continue;
        }
        let b = coefficient(basis_s, n, -i)?;
        if !b.is_zero() {
            acc += a * b;
        }
    }
    Ok(acc)
}

fn check_scope(p: u64, k: i64) -> Result<()> {
    if k % 2 != 0 {
        return Err(Error::InvalidWeight {
            k,
            reason: "weight must be even".into(),
        });
    }
    let listed = [11u64, 17, 19, 23, 29, 31, 37].contains(&p);
    let step = p as i64 - 1;
    let general = modp::is_prime(p)
        && p > 3
        && p % 12 != 1
        && genus(p)? > 0
        && [0, 2].contains(&k.rem_euclid(step));
    if !(listed || general) {
        return Err(Error::UnsupportedLevel {
            p,
            reason: "duality is established for p in {11,17,19,23,29,31,37}, or for k ≡ 0, 2 mod p-1".into(),
        });
    }
    Ok(())
}

/// Box of `size × size` indices starting at the first existing index of each family.
pub fn default_box(p: u64, k: i64, size: i64) -> Result<((i64, i64), (i64, i64))> {
    check_scope(p, k)?;
    let m0 = first_index(p, k, Space::M)?;
    let n0 = first_index(p, 2 - k, Space::S)?;
    Ok(((m0, m0 + size - 1), (n0, n0 + size - 1)))
}

/// Checks `a_k(m, n) = -b_{2-k}(n, m)` for all `m, n` in the (inclusive) ranges,
/// the vanishing and decomposition of every constant term `CT(f_{k,m}·g_{2-k,n})`,
/// and that exactly one of `f_{k,m}`, `g_{2-k,-m}` exists.
pub fn duality_check(p: u64, k: i64, m_range: (i64, i64), n_range: (i64, i64)) -> Result<DualityReport> {
    check_scope(p, k)?;
    let (m_lo, m_hi) = m_range;
    let (n_lo, n_hi) = n_range;
    if m_lo > m_hi || n_lo > n_hi {
        return Err(Error::InvalidArgument("empty index range".into()));
    }
    let fb = weak_basis(p, k, Space::M, m_hi.max(0), n_hi.max(0) + 1)?;
    let gb = weak_basis(p, 2 - k, Space::S, n_hi.max(0), m_hi.max(0) + 1)?;

    let rows = exec::map_range((m_hi - m_lo + 1) as usize, |r| -> Result<_> {
        let m = m_lo + r as i64;
        let mut violations = Vec::new();
        let mut pairings = 0usize;
        let mut failures = Vec::new();
        for n in n_lo..=n_hi {
            let lhs = coefficient(&fb, m, n)?;
            let rhs = -coefficient(&gb, n, m)?;
            if lhs != rhs {
                violations.push(Violation { m, n, lhs: lhs.clone(), rhs: rhs.clone() });
            }
            if let (Some(f), Some(g)) = (fb.element(m), gb.element(n)) {
                pairings += 1;
                let ct = pairing_constant_term(f, g)?;
                let kron = if m == -n { Rat::from_integer(1.into()) } else { Rat::zero() };
                let decomposed = kron + &lhs - &rhs + bruinier_funke_sum(&fb, &gb, m, n)?;
                if !ct.is_zero() || ct != decomposed {
                    failures.push((m, n));
                }
            }
        }
        Ok((violations, pairings, failures))
    });

    let mut report = DualityReport {
        p,
        k,
        m_range,
        n_range,
        checked_pairs: ((m_hi - m_lo + 1) * (n_hi - n_lo + 1)) as usize,
        violations: Vec::new(),
        pairings_checked: 0,
        pairing_failures: Vec::new(),
        complementarity_failures: Vec::new(),
    };
    for row in rows {
        let (v, c, f) = row?;
        report.violations.extend(v);
        report.pairings_checked += c;
        report.pairing_failures.extend(f);
    }
    for m in m_lo.max(-n_hi)..=m_hi.min(-n_lo) {
        if fb.index_set.contains(&m) == gb.index_set.contains(&-m) {
            report.complementarity_failures.push(m);
        }
    }
    Ok(report)
}
