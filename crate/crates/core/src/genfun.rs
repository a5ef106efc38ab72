//! Generating functions of the `M♯_k(p)` bases in genus one (`p = 11, 17, 19`).
//!
//! With `F_k(z, τ) = Σ_m f_{k,m}(τ) q_z^m`, `f = f_{0,2} = q^{-2} + a_{-1}q^{-1} + a_1 q + …`
//! and `g = g_{0,2} = q^{-2} + b_{-1}q^{-1} + b_1 q + …`, the series
//! `(f(z) - f(τ))·F_k` and `(g(z) - g(τ))·F_k` are finite combinations of
//! products `g_{2-k,j}(z)·f_{k,i}(τ)`. Which combination depends on whether
//! `f_{k,-n₀+1}` exists, `-n₀` being the first index of the basis.
//! Identities are verified cross-multiplied, as exact two-variable series.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qseries::{bi_add, bi_combine, bi_mul, bi_sub, BiSeries, QSeries, Rat};
use crate::spaces::Space;
use crate::weak::{coefficient, first_index, weak_basis, WeakBasis};

/// Which weight-0 function sits in the denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    F,
    G,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f" | "F" => Ok(Variant::F),
            "g" | "G" => Ok(Variant::G),
            _ => Err(Error::InvalidArgument(format!("unknown variant {s:?} (use f or g)"))),
        }
    }
}

mod rat_pair {
    use crate::qseries::{rat_from_str, rat_to_string, Rat};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &(Rat, Rat), s: S) -> Result<S::Ok, S::Error> {
        [rat_to_string(&v.0), rat_to_string(&v.1)].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(Rat, Rat), D::Error> {
        let [a, b] = <[String; 2]>::deserialize(d)?;
        let parse = |x: &str| rat_from_str(x).map_err(serde::de::Error::custom);
        Ok((parse(&a)?, parse(&b)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenFunParams {
    pub p: u64,
    pub k: i64,
    /// Minus the first index of the `M♯_k(p)` basis.
    pub n0: i64,
    /// Whether `f_{k,-n₀+1}` is missing.
    pub gap_case: bool,
    /// `(a_{-1}, a_1)` of `f_{0,2}`.
    #[serde(with = "rat_pair")]
    pub a_coeffs: (Rat, Rat),
    /// `(b_{-1}, b_1)` of `g_{0,2}`.
    #[serde(with = "rat_pair")]
    pub b_coeffs: (Rat, Rat),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenFunReport {
    pub p: u64,
    pub k: i64,
    pub variant: Variant,
    /// `(J, I)`: rows `q_z^m` for `m ≤ -n₀ + J`, columns `q_τ^t` for `t ≤ I`.
    pub window: (i64, i64),
    pub gap_case: bool,
    /// Number of products `g_{2-k,j}(z)·f_{k,i}(τ)` in the numerator.
    pub numerator_terms: usize,
    #[serde(skip)]
    pub residual: Option<BiSeries>,
    /// Largest absolute numerator among residual coefficients.
    pub residual_max_numerator: String,
    pub residual_nonzero: Vec<(i64, i64)>,
    pub pass: bool,
}

fn check_level(p: u64, k: i64) -> Result<()> {
    if ![11u64, 17, 19].contains(&p) {
        return Err(Error::UnsupportedLevel {
            p,
            reason: "generating functions are given for the genus-one levels 11, 17, 19".into(),
        });
    }
    if k % 2 != 0 {
        return Err(Error::InvalidWeight {
            k,
            reason: "weight must be even".into(),
        });
    }
    Ok(())
}

/// Residue rule for a missing second basis element.
pub fn gap_case_predicted(p: u64, k: i64) -> bool {
    let r = k.rem_euclid(p as i64 - 1);
    r == 0 || (p == 17 && r == 6) || (p == 19 && (r == 4 || r == 8))
}

fn two_leading(b: &WeakBasis) -> Result<(Rat, Rat)> {
    Ok((coefficient(b, 2, -1)?, coefficient(b, 2, 1)?))
}

pub fn genfun_params(p: u64, k: i64) -> Result<GenFunParams> {
    check_level(p, k)?;
    let n0 = -first_index(p, k, Space::M)?;
    let b = weak_basis(p, k, Space::M, -n0 + 3, 1)?;
    for m in [-n0, -n0 + 2, -n0 + 3] {
        if !b.index_set.contains(&m) {
            return Err(Error::Inconsistent(format!(
                "f_{{{k},{m}}} is missing at level {p}; only the second index may be absent"
            )));
        }
    }
    let gap_case = !b.index_set.contains(&(-n0 + 1));
    if gap_case != gap_case_predicted(p, k) {
        return Err(Error::Inconsistent(format!(
            "computed basis for level {p} weight {k} disagrees with the residue rule for gaps"
        )));
    }
    let f = weak_basis(p, 0, Space::M, 2, 2)?;
    let g = weak_basis(p, 0, Space::S, 2, 2)?;
    Ok(GenFunParams {
        p,
        k,
        n0,
        gap_case,
        a_coeffs: two_leading(&f)?,
        b_coeffs: two_leading(&g)?,
    })
}

fn element(b: &WeakBasis, m: i64) -> Result<&QSeries> {
    b.element(m).ok_or(Error::MissingElement { m })
}

/// Verifies `(den(z) - den(τ))·F_k = numerator` on the window `(J, I)`.
pub fn genfun_check(p: u64, k: i64, j: i64, i: i64, variant: Variant) -> Result<GenFunReport> {
    let params = genfun_params(p, k)?;
    if j < 0 {
        return Err(Error::InvalidArgument("window J must be nonnegative".into()));
    }
    let n0 = params.n0;
    let z_top = -n0 + j;
    let tau_cap = i + 1;

    let fam = weak_basis(p, k, Space::M, z_top + 3, tau_cap + 2)?;
    let dual = weak_basis(p, 2 - k, Space::S, n0 + 2, z_top + 2)?;
    let den_cap = tau_cap + z_top + n0.abs() + 8;
    let den_basis = match variant {
        Variant::F => weak_basis(p, 0, Space::M, 2, den_cap)?,
        Variant::G => weak_basis(p, 0, Space::S, 2, den_cap)?,
    };
    let den = element(&den_basis, 2)?;

    let rows: BTreeMap<i64, QSeries> = fam
        .elements
        .iter()
        .filter(|(m, _)| **m <= z_top + 3)
        .map(|(m, e)| (*m, e.series.clone()))
        .collect();
    let big_f = bi_combine(&rows)?;
    let lhs = bi_sub(&bi_mul(&big_f, den)?, &big_f.mul_tau(den))?;

    let (a_m1, a_1) = params.a_coeffs.clone();
    let (b_m1, b_1) = params.b_coeffs.clone();
    let one = Rat::from_integer(1.into());

    // (coefficient, index of g_{2-k} in z, index of f_k in τ)
    let spec: Vec<(Rat, i64, i64)> = match (params.gap_case, variant) {
        (false, Variant::F) => vec![
            (a_m1, n0 + 1, -n0),
            (one.clone(), n0 + 2, -n0),
            (one, n0 + 1, -n0 + 1),
        ],
        (false, Variant::G) => vec![
            (b_m1, n0 + 1, -n0),
            (one.clone(), n0 + 1, -n0 + 1),
            (one, n0 + 2, -n0),
        ],
        (true, Variant::F) => vec![
            (a_1, n0 - 1, -n0),
            (a_m1.clone(), n0 + 1, -n0),
            (one.clone(), n0 + 2, -n0),
            (a_m1, n0 - 1, -n0 + 2),
            (one, n0 - 1, -n0 + 3),
        ],
        (true, Variant::G) => vec![
            (b_1, n0 - 1, -n0),
            (b_m1.clone(), n0 - 1, -n0 + 2),
            (one.clone(), n0 - 1, -n0 + 3),
            (b_m1, n0 + 1, -n0),
            (one, n0 + 2, -n0),
        ],
    };
    let numerator_terms = spec
        .iter()
        .map(|&(_, zi, ti)| (zi, ti))
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    let mut rhs: Option<BiSeries> = None;
    for (c, zi, ti) in &spec {
        let t = BiSeries::outer(&element(&dual, *zi)?.scale(c), element(&fam, *ti)?);
        rhs = Some(match rhs {
            None => t,
            Some(acc) => bi_add(&acc, &t)?,
        });
    }
    let rhs = rhs.expect("numerator has terms");
    let residual = bi_sub(&lhs, &rhs)?.truncate(z_top + 1, tau_cap)?;
    let nonzero = residual.nonzero_positions();
    let max_num = residual
        .rows()
        .iter()
        .flat_map(|r| r.coeffs().iter().map(|c| c.numer().abs()))
        .max()
        .unwrap_or_default();
    Ok(GenFunReport {
        p,
        k,
        variant,
        window: (j, i),
        gap_case: params.gap_case,
        numerator_terms,
        pass: nonzero.is_empty(),
        residual_max_numerator: max_num.to_string(),
        residual_nonzero: nonzero,
        residual: Some(residual),
    })
}

/// Checks the three-term recurrence expressing `f_{k,n+2}` through
/// `f·f_{k,n}`, earlier basis elements and dual coefficients (gap case only).
pub fn recurrence_check(p: u64, k: i64, n: i64) -> Result<bool> {
    let params = genfun_params(p, k)?;
    let n0 = params.n0;
    if !params.gap_case {
        return Err(Error::InvalidArgument(format!(
            "the recurrence is stated for bases with a gap; level {p} weight {k} has none"
        )));
    }
    if n < -n0 || n == -n0 + 1 {
        return Err(Error::InvalidArgument(format!(
            "recurrence index {n} must satisfy n >= {} and n != {}",
            -n0,
            -n0 + 1
        )));
    }
    let cap = n.max(0) + n0.abs() + 20;
    let fam = weak_basis(p, k, Space::M, n + 2, cap)?;
    let dual = weak_basis(p, 2 - k, Space::S, n0 + 2, n.max(0) + 1)?;
    let f_basis = weak_basis(p, 0, Space::M, 2, cap + n.abs() + 4)?;
    let f = element(&f_basis, 2)?;
    let a = |i: i64| coefficient(&f_basis, 2, i);
    let b = |j: i64| coefficient(&dual, j, n);
    let (a_m1, a_1) = params.a_coeffs.clone();

    let lo = -(n + 2);
    let hi = cap - 2;
    let win = |s: &QSeries| s.rewindow(lo, hi);
    let fk = |m: i64| -> Result<QSeries> {
        match fam.element(m) {
            Some(s) => win(s),
            None => QSeries::zero(lo, hi),
        }
    };

    let mut rhs = win(&f.mul(element(&fam, n)?))?;
    rhs = rhs.sub(&fk(-n0)?.scale(&a(n + n0)?))?;
    for i in -1..=n + n0 - 2 {
        let c = a(i)?;
        if !c.is_zero() {
            rhs = rhs.sub(&fk(n - i)?.scale(&c))?;
        }
    }
    let b_low = b(n0 - 1)?;
    rhs = rhs.add(&fk(-n0 + 3)?.scale(&b_low))?;
    rhs = rhs.add(&fk(-n0 + 2)?.scale(&(&a_m1 * &b_low)))?;
    let c0 = b(n0 + 2)? + &a_m1 * b(n0 + 1)? + &a_1 * &b_low;
    rhs = rhs.add(&fk(-n0)?.scale(&c0))?;
    Ok(rhs == fk(n + 2)?)
}

/// Coefficientwise `F_k = -G_{2-k}` away from the diagonal `q_z^m q_τ^{-m}`,
/// where both carry the leading 1 of exactly one existing element.
pub fn duality_restated(p: u64, k: i64, j: i64, i: i64) -> Result<bool> {
    let params = genfun_params(p, k)?;
    let z_top = -params.n0 + j;
    let fam = weak_basis(p, k, Space::M, z_top, i + 1)?;
    let dual = weak_basis(p, 2 - k, Space::S, i, z_top + 1)?;
    let lead = |b: &WeakBasis, m: i64, n: i64| -> Result<Rat> {
        if n == -m && b.element(m).is_some() {
            Ok(Rat::from_integer(1.into()))
        } else {
            coefficient(b, m, n)
        }
    };
    for m in -params.n0..=z_top {
        for t in -z_top..=i {
            let sum = lead(&fam, m, t)? + lead(&dual, t, m)?;
            let expect = if m == -t { Rat::from_integer(1.into()) } else { Rat::zero() };
            if sum != expect {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `f_{0,2} - g_{0,2}` is constant on `[-2, prec_cap)`.
pub fn f_minus_g_is_constant(p: u64, prec_cap: i64) -> Result<bool> {
    check_level(p, 0)?;
    let f = weak_basis(p, 0, Space::M, 2, prec_cap)?;
    let g = weak_basis(p, 0, Space::S, 2, prec_cap)?;
    let d = element(&f, 2)?.sub(element(&g, 2)?)?;
    Ok((-2..d.prec_cap()).all(|e| e == 0 || d.coeff(e).map(|c| c.is_zero()).unwrap_or(false)))
}
