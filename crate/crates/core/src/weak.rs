//! Reduced echelon bases of weakly holomorphic forms with poles only at
//! infinity: `f_{k,m} = q^{-m} + O(q^{-m+1})` spanning `M♯_k(p)` and
//! `g_{k,m}` spanning `S♯_k(p)` (the forms that also vanish at the cusp 0).
//!
//! Both families come from one descent: `Δ_p` has weight `p - 1`, order
//! `λ_p` at infinity and no other zeros, so `M♯_k = ⋃_ℓ Δ_p^{-ℓ}·M_{k+ℓ(p-1)}`.
//! The anchor space in weight `K = k + ℓ(p-1)` is `M_K(p)` for `M♯`, and
//! `S_K(p) ⊕ ⟨E_K - p^K E_K(pz)⟩` for `S♯`. Its echelon form is computed
//! modulo primes, multiplied by the expansion of `Δ_p^{-ℓ}`, re-reduced, and
//! lifted back to rationals.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::classical::delta_p_quotient;
use crate::echelon::lift_rationals;
use crate::error::{Error, Result};
use crate::modp::{self, Prime};
use crate::qseries::{QSeries, Rat};
use crate::spaces::{gap_sets, generators, genus, lambda_p, sturm_bound, Family, Generators, Space};

/// One basis element `q^{-m} + …` of `M♯_k(p)` or `S♯_k(p)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisElement {
    pub p: u64,
    pub k: i64,
    pub space: Space,
    pub m: i64,
    pub series: QSeries,
}

/// All basis elements with pole order at most `m_max_pole`, on `[-m, prec_cap)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WeakBasis {
    pub p: u64,
    pub k: i64,
    pub space: Space,
    pub index_set: BTreeSet<i64>,
    pub elements: BTreeMap<i64, BasisElement>,
    /// `(mMaxPole, precCap)`.
    pub window: (i64, i64),
    /// Weight of the holomorphic space the basis was descended from.
    pub anchor_weight: i64,
}

impl WeakBasis {
    pub fn element(&self, m: i64) -> Option<&QSeries> {
        self.elements.get(&m).map(|e| &e.series)
    }

    pub fn m_max_pole(&self) -> i64 {
        self.window.0
    }

    pub fn prec_cap(&self) -> i64 {
        self.window.1
    }

    /// Smallest index present, if any.
    pub fn first_index(&self) -> Option<i64> {
        self.index_set.iter().next().copied()
    }
}

fn check_level(p: u64) -> Result<()> {
    if !modp::is_prime(p) || !(5..=37).contains(&p) {
        return Err(Error::UnsupportedLevel {
            p,
            reason: "weakly holomorphic bases are provided for primes 5 <= p <= 37".into(),
        });
    }
    Ok(())
}

fn check_even(k: i64) -> Result<()> {
    if k % 2 != 0 {
        return Err(Error::InvalidWeight {
            k,
            reason: "weight must be even".into(),
        });
    }
    Ok(())
}

fn family(space: Space) -> Family {
    match space {
        Space::M => Family::Modular,
        Space::S => Family::VanishingAtZero,
    }
}

/// Smallest `ℓ ≥ 0` with `ℓλ_p ≥ m_max_pole` and `k + ℓ(p-1) ≥ 4`.
pub fn descent_exponent(p: u64, k: i64, m_max_pole: i64) -> Result<i64> {
    check_level(p)?;
    check_even(k)?;
    let lambda = lambda_p(p)?;
    let step = p as i64 - 1;
    let by_pole = if m_max_pole <= 0 {
        0
    } else {
        (m_max_pole + lambda - 1) / lambda
    };
    let by_weight = if k >= 4 { 0 } else { (4 - k + step - 1) / step };
    Ok(by_pole.max(by_weight))
}

/// Smallest index `m` for which `f_{k,m}` (or `g_{k,m}`) exists.
pub fn first_index(p: u64, k: i64, space: Space) -> Result<i64> {
    let ell = descent_exponent(p, k, 0)?;
    let gens = generators(p, k + ell * (p as i64 - 1), family(space))?;
    let top = gens.max_pivot().ok_or_else(|| {
        Error::Inconsistent("anchor space for the descent is empty".into())
    })?;
    Ok(ell * lambda_p(p)? - top as i64)
}

/// Basis of `M♯_k(p)` (`space = M`) or `S♯_k(p)` (`space = S`) for pole
/// orders `m ≤ m_max_pole`, each element on `[-m, prec_cap)`.
///
/// The window is widened, if needed, so that every element's leading term
/// lies inside it.
pub fn weak_basis(p: u64, k: i64, space: Space, m_max_pole: i64, prec_cap: i64) -> Result<WeakBasis> {
    let ell = descent_exponent(p, k, m_max_pole)?;
    weak_basis_with_descent(p, k, space, m_max_pole, prec_cap, ell)
}

/// As [`weak_basis`], descending from weight `k + ℓ(p-1)` for a given `ℓ`.
pub fn weak_basis_with_descent(
    p: u64,
    k: i64,
    space: Space,
    m_max_pole: i64,
    prec_cap: i64,
    ell: i64,
) -> Result<WeakBasis> {
    check_level(p)?;
    check_even(k)?;
    let lambda = lambda_p(p)?;
    let weight = k + ell * (p as i64 - 1);
    if ell < 0 || weight < 4 || ell * lambda < m_max_pole {
        return Err(Error::InvalidArgument(format!(
            "descent exponent {ell} does not reach pole order {m_max_pole} in weight >= 4"
        )));
    }
    let gens = generators(p, weight, family(space))?;
    let shift = ell * lambda;
    let threshold = shift - m_max_pole;
    // Anchor rows kept, with their pivot orders.
    let kept: Vec<(usize, usize)> = gens
        .pivots
        .iter()
        .enumerate()
        .filter(|(_, &pi)| pi as i64 >= threshold)
        .map(|(i, &pi)| (i, pi))
        .collect();
    let indices: Vec<i64> = kept.iter().map(|&(_, pi)| shift - pi as i64).collect();
    let lowest = indices.iter().copied().min().unwrap_or(0);
    let cap = prec_cap.max(1 - lowest);
    let cols = (sturm_bound(p, weight) + 1).max(cap + shift) as usize;
    let shape: Vec<usize> = indices.iter().map(|&m| (cap + m) as usize).collect();

    let descend = Descent {
        gens: gens.clone(),
        ell,
        cols,
        kept: kept.clone(),
        out_len: (cap + shift) as usize,
    };
    let rows = lift_rationals(&shape, 0, |q| descend.image(q))?;

    let mut elements = BTreeMap::new();
    for (m, row) in indices.iter().zip(rows) {
        let series = QSeries::new(-m, row)?;
        elements.insert(
            *m,
            BasisElement {
                p,
                k,
                space,
                m: *m,
                series,
            },
        );
    }
    Ok(WeakBasis {
        p,
        k,
        space,
        index_set: indices.into_iter().collect(),
        elements,
        window: (m_max_pole, cap),
        anchor_weight: weight,
    })
}

struct Descent {
    gens: Arc<Generators>,
    ell: i64,
    cols: usize,
    /// (anchor row, pivot) pairs in increasing pivot order.
    kept: Vec<(usize, usize)>,
    /// Output positions `0..out_len` correspond to exponents `-ℓλ..`.
    out_len: usize,
}

impl Descent {
    /// Descended, re-reduced rows modulo `q`, each from its leading term to
    /// the end of the window, flattened in the order of `kept`.
    fn image(&self, q: &Prime) -> Option<Vec<u64>> {
        let cols = self.cols;
        let r = self.gens.rref_mod(q, cols).ok()??;
        let (_, d) = delta_p_quotient(self.gens.p, -self.ell)
            .expand_mod(q, self.out_len)
            .ok()?;
        let dm: Vec<u64> = d.iter().map(|&x| q.to_mont(x)).collect();
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(self.kept.len());
        for &(i, pi) in &self.kept {
            let src: Vec<u64> = r[i * cols..i * cols + self.out_len]
                .iter()
                .map(|&x| q.to_mont(x))
                .collect();
            let mut h = vec![0u64; self.out_len];
            for (a, &x) in src.iter().enumerate().skip(pi) {
                if x == 0 {
                    continue;
                }
                for (hj, &dj) in h[a..].iter_mut().zip(&dm) {
                    *hj = q.add(*hj, q.mont_mul(x, dj));
                }
            }
            rows.push(h);
        }
        // Re-reduce from the largest pivot down; each row is cleared at the
        // later pivots in increasing order.
        for a in (0..rows.len()).rev() {
            for b in a + 1..rows.len() {
                let pb = self.kept[b].1;
                let f = rows[a][pb];
                if f == 0 {
                    continue;
                }
                let (head, tail) = rows.split_at_mut(b);
                let target = &mut head[a];
                for (x, &y) in target[pb..].iter_mut().zip(&tail[0][pb..]) {
                    *x = q.sub(*x, q.mont_mul(f, y));
                }
            }
        }
        let mut out = Vec::new();
        for (&(_, pi), row) in self.kept.iter().zip(&rows) {
            out.extend(row[pi..].iter().map(|&x| q.from_mont(x)));
        }
        Some(out)
    }
}

/// `a_k(m, n)` or `b_k(m, n)`: the coefficient of `qⁿ` in the element of
/// index `m`, with value 0 when `n = -m` or when the element does not exist.
pub fn coefficient(basis: &WeakBasis, m: i64, n: i64) -> Result<Rat> {
    if m > basis.m_max_pole() {
        return Err(Error::InsufficientPrecision(format!(
            "index {m} lies beyond the computed pole order {}",
            basis.m_max_pole()
        )));
    }
    if n == -m {
        return Ok(Rat::zero());
    }
    match basis.element(m) {
        Some(s) => s.coeff(n),
        None => {
            if n >= basis.prec_cap() {
                return Err(Error::CoefficientUnavailable {
                    exp: n,
                    min: -m,
                    cap: basis.prec_cap(),
                });
            }
            Ok(Rat::zero())
        }
    }
}

/// Recomputes the basis descending from one weight higher and reports
/// whether elements and index set agree on the shared window.
pub fn check_stabilization(basis: &WeakBasis) -> Result<()> {
    let ell = (basis.anchor_weight - basis.k) / (basis.p as i64 - 1);
    let next = weak_basis_with_descent(
        basis.p,
        basis.k,
        basis.space,
        basis.m_max_pole(),
        basis.prec_cap(),
        ell + 1,
    )?;
    if next.index_set != basis.index_set {
        return Err(Error::Stabilization(format!(
            "index sets differ between descent weights {} and {}",
            basis.anchor_weight, next.anchor_weight
        )));
    }
    for (m, e) in &basis.elements {
        let other = &next.elements[m].series;
        if other.rewindow(-m, basis.prec_cap())? != e.series {
            return Err(Error::Stabilization(format!(
                "element {m} changes between descent weights {} and {}",
                basis.anchor_weight, next.anchor_weight
            )));
        }
    }
    Ok(())
}

/// Index set of `M♯_k(p)` or `S♯_k(p)` predicted from holomorphic data:
/// every `m ≥ first` except those in `excluded`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PredictedIndexSet {
    pub p: u64,
    pub k: i64,
    pub space: Space,
    pub first: i64,
    pub excluded: BTreeSet<i64>,
}

impl PredictedIndexSet {
    pub fn contains(&self, m: i64) -> bool {
        m >= self.first && !self.excluded.contains(&m)
    }

    /// Predicted indices in `[lo, hi]`.
    pub fn within(&self, lo: i64, hi: i64) -> BTreeSet<i64> {
        (lo..=hi).filter(|&m| self.contains(m)).collect()
    }
}

/// Writes `k = k' + ℓ(p-1)` with `0 ≤ k' < p - 1` and reads the index set
/// off genus, `λ_p` and the gap sets of weight `k'`.
pub fn index_set_predicted(p: u64, k: i64, space: Space) -> Result<PredictedIndexSet> {
    check_level(p)?;
    check_even(k)?;
    let g0 = genus(p)?;
    if g0 == 0 || (p % 12 == 1 && p != 37) {
        return Err(Error::UnsupportedLevel {
            p,
            reason: "predictions need positive genus and p ≢ 1 mod 12 (or p = 37)".into(),
        });
    }
    let step = p as i64 - 1;
    let kr = k.rem_euclid(step);
    let shift = (k - kr) / step * lambda_p(p)?;
    let (first, excluded): (i64, BTreeSet<i64>) = match (kr, space) {
        (0, Space::M) => (-shift, (1..=g0).map(|j| j - shift).collect()),
        (0, Space::S) => (g0 + 1 - shift, BTreeSet::new()),
        (2, Space::M) => (-g0 - shift, BTreeSet::new()),
        (2, Space::S) => (-g0 - shift, [-shift].into_iter().collect()),
        _ => {
            let gaps = gap_sets(p, kr)?;
            match space {
                Space::M => (
                    -gaps.m_max - shift,
                    gaps.miss_m.iter().map(|j| -j - shift).collect(),
                ),
                Space::S => (
                    -gaps.s_max - shift,
                    gaps.miss_s.iter().map(|j| -j - shift).collect(),
                ),
            }
        }
    };
    Ok(PredictedIndexSet {
        p,
        k,
        space,
        first,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::qs_mul;

    fn set(v: &[i64]) -> BTreeSet<i64> {
        v.iter().copied().collect()
    }

    fn assert_reduced(b: &WeakBasis) {
        for (m, e) in &b.elements {
            assert_eq!(e.series.valuation(), Some(-m));
            assert_eq!(e.series.coeff(-m).unwrap(), Rat::from_integer(1.into()));
            for other in &b.index_set {
                if other != m && -other >= -m && -other < b.prec_cap() {
                    assert!(e.series.coeff(-other).unwrap().is_zero(), "m={m} other={other}");
                }
            }
        }
    }

    #[test]
    fn level_eleven_index_sets() {
        let b = weak_basis(11, 0, Space::M, 5, 10).unwrap();
        assert_eq!(b.index_set, set(&[0, 2, 3, 4, 5]));
        assert_reduced(&b);
        let b = weak_basis(11, 2, Space::S, 5, 10).unwrap();
        assert_eq!(b.index_set, set(&[-1, 1, 2, 3, 4, 5]));
        assert_reduced(&b);
        for e in b.elements.values() {
            assert!(e.series.coeff(0).unwrap().is_zero());
        }
    }

    #[test]
    fn level_seventeen_weight_six() {
        let b = weak_basis(17, 6, Space::M, 9, 12).unwrap();
        let mut expect = set(&[-8]);
        expect.extend(-6..=9);
        assert_eq!(b.index_set, expect);
        assert_reduced(&b);
        assert_eq!(first_index(17, 6, Space::M).unwrap(), -8);
    }

    #[test]
    fn holomorphic_elements_match_echelon_basis() {
        let b = weak_basis(19, 8, Space::M, 0, 30).unwrap();
        let h = crate::spaces::holo_basis(19, 8, Space::M, 60).unwrap();
        for (e, piv) in h.elements.iter().zip(&h.pivots) {
            let w = b.element(-piv).unwrap();
            assert_eq!(*w, e.rewindow(*piv, 30).unwrap());
        }
    }

    #[test]
    fn weight_zero_elements_are_hauptmodul_like() {
        // f_{0,m} has no constant term for m > 0 and f_{0,0} = 1.
        let b = weak_basis(23, 0, Space::M, 6, 8).unwrap();
        assert_eq!(b.element(0).unwrap(), &QSeries::one(8).unwrap().rewindow(0, 8).unwrap());
        for (m, e) in &b.elements {
            if *m > 0 {
                assert!(e.series.coeff(0).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn multiplication_recurrence_in_weight_zero() {
        // f_{0,n-g0}·f_{0,g0+1} reduced against computed elements is f_{0,n+1}.
        let p = 11u64;
        let g0 = 1;
        let b = weak_basis(p, 0, Space::M, 9, 12).unwrap();
        for n in 2 * g0 + 1..=8 {
            let prod = qs_mul(b.element(n - g0).unwrap(), b.element(g0 + 1).unwrap());
            let mut r = prod.clone();
            for m in (-(n + 1) + 1..=0).map(|e| -e).collect::<Vec<_>>() {
                if let Some(e) = b.element(m) {
                    let c = r.coeff(-m).unwrap();
                    if !c.is_zero() {
                        r = r.sub(&e.rewindow(-m, r.prec_cap()).unwrap().scale(&c)).unwrap();
                    }
                }
            }
            let target = b.element(n + 1).unwrap().rewindow(-(n + 1), r.prec_cap()).unwrap();
            assert_eq!(r.rewindow(-(n + 1), r.prec_cap()).unwrap(), target, "n={n}");
        }
    }

    #[test]
    fn descent_is_stable() {
        for (p, k, space) in [(11u64, 0i64, Space::M), (11, 2, Space::S), (17, 6, Space::M), (19, -14, Space::S)] {
            let b = weak_basis(p, k, space, 6, 6).unwrap();
            check_stabilization(&b).unwrap();
        }
    }

    #[test]
    fn predictions_match_computation() {
        for p in [11u64, 17, 19] {
            for k in [-(p as i64 - 1), 0, 2, 4, 6, 8, p as i64 - 3] {
                for space in [Space::M, Space::S] {
                    let pred = index_set_predicted(p, k, space).unwrap();
                    let lo = pred.first - 3;
                    let hi = pred.first + 12;
                    let b = weak_basis(p, k, space, hi, 4).unwrap();
                    assert_eq!(b.index_set, pred.within(lo, hi), "p={p} k={k} {space}");
                }
            }
        }
        assert!(index_set_predicted(13, 0, Space::M).is_err());
        let pred = index_set_predicted(19, 4, Space::M).unwrap();
        assert!(pred.excluded.contains(&-5));
    }

    #[test]
    fn coefficient_conventions() {
        let b = weak_basis(11, 0, Space::M, 5, 6).unwrap();
        assert!(coefficient(&b, 1, 3).unwrap().is_zero());
        assert!(coefficient(&b, 3, -3).unwrap().is_zero());
        assert!(coefficient(&b, 2, 6).is_err());
        assert!(coefficient(&b, 7, 0).is_err());
        assert!(!coefficient(&b, 2, 1).unwrap().is_zero());
    }
}
