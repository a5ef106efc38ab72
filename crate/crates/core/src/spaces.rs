//! Dimensions of `M_k(Γ₀(p))` and `S_k(Γ₀(p))`, their reduced echelon bases,
//! gap sets, and bounds on the largest vanishing order.
//!
//! Spans are generated by trace forms `Σ_n Tr(T_m T_n) qⁿ` together with
//! level-one Eisenstein series. Everything is assembled modulo word primes:
//! a first prime selects independent generators on Sturm-bound columns, the
//! rational echelon form on the first `max pivot + 1` columns is lifted and
//! certified exactly (which proves the pivot set), and longer windows are
//! lifted afterwards using only primes that reproduce the certified pivots.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::classical::{eisenstein_int, eisenstein_int_mod, sigma_table, sigma_table_mod};
use crate::echelon::{certify_rref, lift_rationals, rref_mod, IncrementalEchelon, ModMatrix};
use crate::error::{Error, Result};
use crate::modp::{self, pool_prime, Prime};
use crate::qseries::{QSeries, Rat};
use crate::trace::{trace_table, TraceTable};

/// Which holomorphic space a basis spans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    M,
    S,
}

impl std::fmt::Display for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Space::M => write!(f, "M"),
            Space::S => write!(f, "S"),
        }
    }
}

/// Reduced row echelon basis: element `i` is `q^{pivots[i]} + …` and has
/// coefficient 0 at every other pivot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchelonBasis {
    pub p: u64,
    pub k: i64,
    pub space: Space,
    pub elements: Vec<QSeries>,
    pub pivots: Vec<i64>,
}

impl EchelonBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Subtracts the basis combination matching `f` at the pivots. The result
    /// vanishes on the window iff `f` lies in the span there.
    pub fn reduce(&self, f: &QSeries) -> Result<QSeries> {
        let mut out = f.clone();
        for (e, &piv) in self.elements.iter().zip(&self.pivots) {
            let c = out.coeff(piv)?;
            if !c.is_zero() {
                out = out.sub(&e.scale(&c))?;
            }
        }
        Ok(out)
    }
}

/// Pivot data of `M_k(p)` and `S_k(p)`: gap sets and extreme vanishing orders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GapReport {
    pub p: u64,
    pub k: i64,
    #[serde(rename = "missM")]
    pub miss_m: Vec<i64>,
    #[serde(rename = "missS")]
    pub miss_s: Vec<i64>,
    #[serde(rename = "cM")]
    pub c_m: usize,
    #[serde(rename = "cS")]
    pub c_s: usize,
    #[serde(rename = "mMax")]
    pub m_max: i64,
    #[serde(rename = "sMax")]
    pub s_max: i64,
    #[serde(rename = "dimM")]
    pub dim_m: i64,
    #[serde(rename = "dimS")]
    pub dim_s: i64,
}

fn check_prime(p: u64) -> Result<()> {
    if !modp::is_prime(p) {
        return Err(Error::InvalidLevel {
            p,
            reason: "level must be prime".into(),
        });
    }
    Ok(())
}

fn check_level(p: u64) -> Result<()> {
    check_prime(p)?;
    if p <= 3 {
        return Err(Error::InvalidLevel {
            p,
            reason: "level must be a prime p > 3".into(),
        });
    }
    Ok(())
}

fn check_weight(k: i64) -> Result<()> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidWeight {
            k,
            reason: "holomorphic spaces are computed in even weight >= 2".into(),
        });
    }
    Ok(())
}

/// Genus of `X₀(p)`.
pub fn genus(p: u64) -> Result<i64> {
    check_prime(p)?;
    let g = ((p + 1) / 12) as i64;
    Ok(if p % 12 == 1 { g - 1 } else { g })
}

/// `dim S_k(Γ₀(p))`.
pub fn dim_s(p: u64, k: i64) -> Result<i64> {
    check_level(p)?;
    check_weight(k)?;
    let g = genus(p)?;
    if k == 2 {
        return Ok(g);
    }
    let correction = match p % 12 {
        1 => 2 * (k / 3) + 2 * (k / 4),
        5 => 2 * (k / 4),
        7 => 2 * (k / 3),
        _ => 0,
    };
    Ok(g * k - (g + 1) + correction)
}

/// `dim` of the Eisenstein subspace: 1 in weight 2, else 2.
pub fn dim_e(p: u64, k: i64) -> Result<i64> {
    check_level(p)?;
    check_weight(k)?;
    Ok(if k == 2 { 1 } else { 2 })
}

pub fn dim_m(p: u64, k: i64) -> Result<i64> {
    Ok(dim_s(p, k)? + dim_e(p, k)?)
}

/// `λ_p = (p² - 1)/12`, the order of `Δ_p` at infinity.
pub fn lambda_p(p: u64) -> Result<i64> {
    check_level(p)?;
    Ok(((p * p - 1) / 12) as i64)
}

/// Sturm bound `⌊k(p+1)/12⌋`: a form in `M_k(p)` vanishing to higher order is 0.
pub fn sturm_bound(p: u64, k: i64) -> i64 {
    k * (p as i64 + 1) / 12
}

/// Smallest precision accepted by [`holo_basis`].
pub fn precision_floor(p: u64, k: i64) -> Result<i64> {
    let ceil = (k * (p as i64 + 1) + 11) / 12;
    Ok(ceil + lambda_p(p)? + 8)
}

/// Generator families with a cached, certified echelon structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Family {
    /// `M_k(p)`.
    Modular,
    /// `S_k(p)`.
    Cusp,
    /// `S_k(p) ⊕ ⟨E_k - p^k E_k(pz)⟩`: forms vanishing at the cusp 0 (`k ≥ 4`).
    VanishingAtZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RowSource {
    Trace(usize),
    /// `b·E_k` for `k ≥ 4`; `(p-1)·E_{2,p}` for `k = 2`.
    Eisenstein,
    /// `b·E_k(pz)`.
    EisensteinAtP,
    /// `b·(E_k - p^k E_k(pz))`.
    EisensteinVanishing,
}

/// Independent generators of a space with certified pivot orders.
#[derive(Debug)]
pub(crate) struct Generators {
    pub p: u64,
    pub k: i64,
    sources: Vec<RowSource>,
    pub pivots: Vec<usize>,
    max_trace_index: usize,
}

fn family_dim(p: u64, k: i64, family: Family) -> Result<i64> {
    match family {
        Family::Modular => dim_m(p, k),
        Family::Cusp => dim_s(p, k),
        Family::VanishingAtZero => {
            if k < 4 {
                return Err(Error::InvalidWeight {
                    k,
                    reason: "the cusp-0 vanishing family is built in weight >= 4".into(),
                });
            }
            Ok(dim_s(p, k)? + 1)
        }
    }
}

fn eisenstein_sources(k: i64, family: Family) -> Vec<RowSource> {
    match family {
        Family::Modular if k == 2 => vec![RowSource::Eisenstein],
        Family::Modular => vec![RowSource::Eisenstein, RowSource::EisensteinAtP],
        Family::Cusp => vec![],
        Family::VanishingAtZero => vec![RowSource::EisensteinVanishing],
    }
}

impl Generators {
    pub fn dim(&self) -> usize {
        self.sources.len()
    }

    pub fn max_pivot(&self) -> Option<usize> {
        self.pivots.last().copied()
    }

    fn table_for(&self, cols: usize) -> Result<Option<Arc<TraceTable>>> {
        if self.max_trace_index == 0 {
            return Ok(None);
        }
        let need = self.max_trace_index * cols.saturating_sub(1).max(1);
        Ok(Some(trace_table(self.p, self.k, need)?))
    }

    /// Generator rows modulo `q` on columns `0..cols`.
    pub fn rows_mod(&self, q: &Prime, cols: usize) -> Result<ModMatrix> {
        let table = self.table_for(cols)?;
        let reduced = table.as_ref().map(|t| t.reduce(q));
        let mut m = ModMatrix::zeros(self.dim(), cols);
        for (i, src) in self.sources.iter().enumerate() {
            let row = source_row_mod(self.p, self.k, *src, q, cols, reduced.as_deref());
            m.row_mut(i).copy_from_slice(&row);
        }
        Ok(m)
    }

    /// Generator rows as exact integers on columns `0..cols`.
    pub fn rows_exact(&self, cols: usize) -> Result<Vec<Vec<BigInt>>> {
        let table = self.table_for(cols)?;
        self.sources
            .iter()
            .map(|src| source_row_exact(self.p, self.k, *src, cols, table.as_deref()))
            .collect()
    }

    /// Reduced echelon form modulo `q` on `cols ≥ max pivot + 1` columns, or
    /// `None` if `q` loses one of the certified pivots. Only the `dim`
    /// nonzero rows are returned, flattened.
    pub fn rref_mod(&self, q: &Prime, cols: usize) -> Result<Option<Vec<u64>>> {
        let mut m = self.rows_mod(q, cols)?;
        let piv = rref_mod(&mut m, q);
        if piv != self.pivots {
            return Ok(None);
        }
        m.data.truncate(self.dim() * cols);
        Ok(Some(m.data))
    }

    /// Exact reduced echelon form on `cols` columns, certified against the
    /// integer generator rows.
    pub fn echelon_exact(&self, cols: usize) -> Result<Vec<Vec<Rat>>> {
        let dim = self.dim();
        if dim == 0 {
            return Ok(Vec::new());
        }
        let cols = cols.max(self.max_pivot().unwrap_or(0) + 1);
        let table = self.table_for(cols)?;
        let shape = vec![cols; dim];
        let r = lift_rationals(&shape, 0, |q| {
            let reduced = table.as_ref().map(|t| t.reduce(q));
            let mut m = ModMatrix::zeros(dim, cols);
            for (i, src) in self.sources.iter().enumerate() {
                let row = source_row_mod(self.p, self.k, *src, q, cols, reduced.as_deref());
                m.row_mut(i).copy_from_slice(&row);
            }
            let piv = rref_mod(&mut m, q);
            if piv != self.pivots {
                return None;
            }
            m.data.truncate(dim * cols);
            Some(m.data)
        })?;
        let g = self.rows_exact(cols)?;
        if !certify_rref(&g, &r, &self.pivots) {
            return Err(Error::Inconsistent(format!(
                "echelon form of weight {} level {} failed exact verification",
                self.k, self.p
            )));
        }
        Ok(r)
    }
}

fn source_row_mod(
    p: u64,
    k: i64,
    src: RowSource,
    q: &Prime,
    cols: usize,
    traces: Option<&[u64]>,
) -> Vec<u64> {
    match src {
        RowSource::Trace(m) => {
            let t = traces.expect("trace rows need a trace table");
            let mut row = vec![0u64; cols];
            for (n, x) in row.iter_mut().enumerate().skip(1) {
                let g = num_integer::gcd(m, n);
                let mut acc = 0u64;
                for d in 1..=g {
                    if g % d != 0 || (d as u64).is_multiple_of(p) {
                        continue;
                    }
                    let w = q.pow(d as u64, (k - 1) as u64);
                    acc = q.add(acc, q.mul(w, t[m * n / (d * d)]));
                }
                *x = acc;
            }
            row
        }
        RowSource::Eisenstein if k == 2 => {
            let sig = sigma_table_mod(q, 1, cols);
            let mut row = vec![0u64; cols];
            row[0] = (p - 1) % q.value();
            for n in 1..cols {
                let mut v = q.mul(24, sig[n]);
                if (n as u64).is_multiple_of(p) {
                    v = q.sub(v, q.mul(q.mul(24, p), sig[n / p as usize]));
                }
                row[n] = v;
            }
            row
        }
        RowSource::Eisenstein => eisenstein_int_mod(q, k, cols),
        RowSource::EisensteinAtP => spread_mod(&eisenstein_int_mod(q, k, cols), p, cols),
        RowSource::EisensteinVanishing => {
            let e = eisenstein_int_mod(q, k, cols);
            let ep = spread_mod(&e, p, cols);
            let pk = q.pow(p, k as u64);
            e.iter().zip(&ep).map(|(&a, &b)| q.sub(a, q.mul(pk, b))).collect()
        }
    }
}

fn spread_mod(e: &[u64], p: u64, cols: usize) -> Vec<u64> {
    let mut out = vec![0u64; cols];
    for (i, x) in e.iter().enumerate() {
        let j = i * p as usize;
        if j >= cols {
            break;
        }
        out[j] = *x;
    }
    out
}

fn spread_exact(e: &[BigInt], p: u64, cols: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); cols];
    for (i, x) in e.iter().enumerate() {
        let j = i * p as usize;
        if j >= cols {
            break;
        }
        out[j] = x.clone();
    }
    out
}

fn source_row_exact(
    p: u64,
    k: i64,
    src: RowSource,
    cols: usize,
    table: Option<&TraceTable>,
) -> Result<Vec<BigInt>> {
    Ok(match src {
        RowSource::Trace(m) => {
            let t = table.expect("trace rows need a trace table");
            let mut row = vec![BigInt::zero(); cols];
            for (n, x) in row.iter_mut().enumerate().skip(1) {
                *x = t.product(m, n);
            }
            row
        }
        RowSource::Eisenstein if k == 2 => {
            let sig = sigma_table(1, cols);
            let mut row = vec![BigInt::zero(); cols];
            row[0] = BigInt::from(p - 1);
            for n in 1..cols {
                let mut v = &sig[n] * 24;
                if (n as u64).is_multiple_of(p) {
                    v -= &sig[n / p as usize] * BigInt::from(24 * p);
                }
                row[n] = v;
            }
            row
        }
        RowSource::Eisenstein => eisenstein_int(k, cols),
        RowSource::EisensteinAtP => spread_exact(&eisenstein_int(k, cols), p, cols),
        RowSource::EisensteinVanishing => {
            let e = eisenstein_int(k, cols);
            let ep = spread_exact(&e, p, cols);
            let pk = BigInt::from(p).pow(k as u32);
            e.iter().zip(&ep).map(|(a, b)| a - &pk * b).collect()
        }
    })
}

fn select_generators(p: u64, k: i64, family: Family) -> Result<Generators> {
    let dim = family_dim(p, k, family)? as usize;
    let cols = sturm_bound(p, k) as usize + 1;
    let mut sources = Vec::new();
    let q0 = pool_prime(0);
    let mut ech = IncrementalEchelon::new(q0, cols);
    for src in eisenstein_sources(k, family) {
        if ech.insert(&source_row_mod(p, k, src, &q0, cols, None)) {
            sources.push(src);
        }
    }
    let mut max_trace_index = 0;
    if ech.rank() < dim {
        let cusp_dim = dim_s(p, k)? as usize;
        let mut table = trace_table(p, k, (cusp_dim + 4) * (cols - 1).max(1))?;
        let mut reduced = table.reduce(&q0);
        let mut m = 1usize;
        let mut stall = 0usize;
        while ech.rank() < dim {
            if m * (cols - 1) > table.n_max() {
                table = trace_table(p, k, 2 * m * (cols - 1))?;
                reduced = table.reduce(&q0);
            }
            let row = source_row_mod(p, k, RowSource::Trace(m), &q0, cols, Some(&reduced));
            if ech.insert(&row) {
                sources.push(RowSource::Trace(m));
                max_trace_index = m;
                stall = 0;
            } else {
                stall += 1;
                if stall > 2 * dim {
                    return Err(Error::CuspSpaceGeneration {
                        achieved: ech.rank(),
                        target: dim,
                    });
                }
            }
            m += 1;
        }
    }
    // Pivots over Q are elementwise at most the pivots modulo any prime;
    // taking the minimum over two primes guards against an unlucky first one.
    let mut gens = Generators {
        p,
        k,
        sources,
        pivots: ech.pivots(),
        max_trace_index,
    };
    if gens.dim() > 0 {
        let q1 = pool_prime(1);
        let mut m = gens.rows_mod(&q1, cols)?;
        let piv1 = rref_mod(&mut m, &q1);
        if piv1.len() == gens.pivots.len() {
            for (a, b) in gens.pivots.iter_mut().zip(piv1) {
                *a = (*a).min(b);
            }
        }
        let c = gens.max_pivot().unwrap_or(0) + 1;
        gens.echelon_exact(c)?;
    }
    Ok(gens)
}

type GeneratorCache = RwLock<HashMap<(u64, i64, Family), Arc<Generators>>>;
static GENERATORS: OnceLock<GeneratorCache> = OnceLock::new();

/// Certified generators of a family, shared across threads.
pub(crate) fn generators(p: u64, k: i64, family: Family) -> Result<Arc<Generators>> {
    check_level(p)?;
    check_weight(k)?;
    let cache = GENERATORS.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(g) = cache.read().expect("generator cache poisoned").get(&(p, k, family)) {
        return Ok(g.clone());
    }
    let gens = Arc::new(select_generators(p, k, family)?);
    let mut map = cache.write().expect("generator cache poisoned");
    Ok(map.entry((p, k, family)).or_insert(gens).clone())
}

pub(crate) fn clear_generator_cache() {
    if let Some(cache) = GENERATORS.get() {
        cache.write().expect("generator cache poisoned").clear();
    }
}

fn check_supported_level(p: u64) -> Result<()> {
    check_level(p)?;
    if p > 37 {
        return Err(Error::UnsupportedLevel {
            p,
            reason: "holomorphic bases are provided for primes 5 <= p <= 37".into(),
        });
    }
    Ok(())
}

fn to_basis(p: u64, k: i64, space: Space, gens: &Generators, cols: usize, cap: i64) -> Result<EchelonBasis> {
    let rows = gens.echelon_exact(cols)?;
    let elements = rows
        .into_iter()
        .map(|r| QSeries::new(0, r)?.truncate(cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(EchelonBasis {
        p,
        k,
        space,
        elements,
        pivots: gens.pivots.iter().map(|&x| x as i64).collect(),
    })
}

/// Reduced echelon basis of `M_k(p)` or `S_k(p)` on `[0, prec_cap)`.
pub fn holo_basis(p: u64, k: i64, space: Space, prec_cap: i64) -> Result<EchelonBasis> {
    check_supported_level(p)?;
    check_weight(k)?;
    let floor = precision_floor(p, k)?;
    if prec_cap < floor {
        return Err(Error::InsufficientPrecision(format!(
            "precision {prec_cap} is below the floor {floor} for weight {k} level {p}"
        )));
    }
    let family = match space {
        Space::M => Family::Modular,
        Space::S => Family::Cusp,
    };
    let gens = generators(p, k, family)?;
    to_basis(p, k, space, &gens, prec_cap as usize, prec_cap)
}

/// Reduced echelon basis of `S_k(p)`; the window is widened to the Sturm
/// bound when `prec_cap` is smaller.
pub fn cusp_basis(p: u64, k: i64, prec_cap: i64) -> Result<EchelonBasis> {
    check_level(p)?;
    check_weight(k)?;
    let gens = generators(p, k, Family::Cusp)?;
    let cap = prec_cap.max(sturm_bound(p, k) + 1);
    to_basis(p, k, Space::S, &gens, cap as usize, cap)
}

fn missing_between(pivots: &[usize]) -> Vec<i64> {
    let mut miss = Vec::new();
    for w in pivots.windows(2) {
        miss.extend((w[0] + 1..w[1]).map(|x| x as i64));
    }
    miss
}

/// Gap sets of `M_k(p)` and `S_k(p)` from the certified pivot orders.
pub fn gap_sets(p: u64, k: i64) -> Result<GapReport> {
    check_supported_level(p)?;
    check_weight(k)?;
    let gm = generators(p, k, Family::Modular)?;
    let gs = generators(p, k, Family::Cusp)?;
    let miss_m = missing_between(&gm.pivots);
    let miss_s = missing_between(&gs.pivots);
    Ok(GapReport {
        p,
        k,
        c_m: miss_m.len(),
        c_s: miss_s.len(),
        miss_m,
        miss_s,
        m_max: gm.max_pivot().unwrap_or(0) as i64,
        s_max: gs.max_pivot().unwrap_or(0) as i64,
        dim_m: gm.dim() as i64,
        dim_s: gs.dim() as i64,
    })
}

/// Order of vanishing at `i` forced on every form in `M_w(SL₂(Z))`.
pub fn alpha2(w: i64) -> i64 {
    if w % 4 == 0 {
        0
    } else {
        1
    }
}

/// Order of vanishing at `e^{2πi/3}` forced on every form in `M_w(SL₂(Z))`.
pub fn alpha3(w: i64) -> i64 {
    match w.rem_euclid(6) {
        0 => 0,
        2 => 2,
        _ => 1,
    }
}

/// `kp/12 - α₂(kp)/2 - α₃(kp)/3`, an upper bound for the largest vanishing
/// order at infinity of a nonzero form in `S_k(p)`.
pub fn ahlgren_bound(p: u64, k: i64) -> Result<Rat> {
    check_prime(p)?;
    if k < 2 || (p as i64) < 5.max(k + 1) {
        return Err(Error::BoundHypothesis(format!(
            "need k >= 2 and p >= max(5, k + 1), got p = {p}, k = {k}"
        )));
    }
    let w = k * p as i64;
    let r = |n: i64, d: i64| Rat::new(BigInt::from(n), BigInt::from(d));
    Ok(r(w, 12) - r(alpha2(w), 2) - r(alpha3(w), 3))
}

/// `⌊(p-k)/12⌋ + 1 + ε` bounding the number of gaps in `S_k(p)`.
pub fn gap_count_bound(p: u64, k: i64) -> Result<i64> {
    check_level(p)?;
    check_weight(k)?;
    let pi = p as i64;
    if k > pi - 1 {
        return Err(Error::InvalidWeight {
            k,
            reason: format!("gap count bound needs k <= p - 1 = {}", pi - 1),
        });
    }
    let eps = if (pi - k + 1) % 12 == 0 {
        1
    } else if (pi - k - 1) % 12 == 0 {
        -1
    } else {
        0
    };
    Ok((pi - k) / 12 + 1 + eps)
}

/// Reduced echelon form check used by tests and callers holding a basis.
pub fn is_reduced_echelon(b: &EchelonBasis) -> bool {
    if b.pivots.windows(2).any(|w| w[0] >= w[1]) || b.pivots.len() != b.elements.len() {
        return false;
    }
    b.elements.iter().enumerate().all(|(i, e)| {
        e.valuation() == Some(b.pivots[i])
            && b.pivots.iter().enumerate().all(|(j, &pj)| {
                let c = e.coeff(pj).unwrap_or_else(|_| Rat::zero());
                if i == j {
                    c.is_one()
                } else {
                    c.is_zero()
                }
            })
    })
}
