//! Row reduction over `Q` and over word primes, plus the multimodular
//! lifting driver used to recover rational echelon forms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exec;
use crate::modp::{pool_prime, rational_reconstruction, Crt, Prime};
use crate::qseries::Rat;

/// Reduced row echelon form over `Q`, in place. Zero rows are dropped.
/// Returns the pivot columns.
pub fn rref_rational(rows: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let ncols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(i) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, i);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row).skip(c) {
                *x -= &f * y;
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Dense row-major matrix of residues modulo a word prime.
#[derive(Clone, Debug)]
pub struct ModMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl ModMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ModMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Reduced row echelon form modulo `q`, in place (plain residues in and out).
/// Rows past the rank end up zero. Returns the pivot columns.
pub fn rref_mod(m: &mut ModMatrix, q: &Prime) -> Vec<usize> {
    for x in m.data.iter_mut() {
        *x = q.to_mont(*x);
    }
    let cols = m.cols;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.rows {
            break;
        }
        let Some(i) = (r..m.rows).find(|&i| m.data[i * cols + c] != 0) else {
            continue;
        };
        if i != r {
            for j in 0..cols {
                m.data.swap(r * cols + j, i * cols + j);
            }
        }
        let inv = q.to_mont(q.inv(q.from_mont(m.data[r * cols + c])));
        for x in m.row_mut(r)[c..].iter_mut() {
            *x = q.mont_mul(*x, inv);
        }
        let (before, rest) = m.data.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for row in before.chunks_mut(cols).chain(after.chunks_mut(cols)) {
            let f = row[c];
            if f == 0 {
                continue;
            }
            for (x, &y) in row[c..].iter_mut().zip(&pivot_row[c..]) {
                *x = q.sub(*x, q.mont_mul(f, y));
            }
        }
        pivots.push(c);
        r += 1;
    }
    for x in m.data.iter_mut() {
        *x = q.from_mont(*x);
    }
    pivots
}

/// An echelon form modulo `q` that accepts candidate rows one at a time and
/// keeps those that raise the rank.
#[derive(Clone, Debug)]
pub struct IncrementalEchelon {
    q: Prime,
    cols: usize,
    /// Rows in Montgomery form, each normalised to 1 at its pivot.
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl IncrementalEchelon {
    pub fn new(q: Prime, cols: usize) -> Self {
        IncrementalEchelon {
            q,
            cols,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Pivot columns of the accepted rows, sorted.
    pub fn pivots(&self) -> Vec<usize> {
        let mut p = self.pivots.clone();
        p.sort_unstable();
        p
    }

    /// Reduces `row` (plain residues, length `cols`) and keeps it if it is
    /// independent of the rows accepted so far.
    pub fn insert(&mut self, row: &[u64]) -> bool {
        let q = &self.q;
        let mut v: Vec<u64> = row.iter().take(self.cols).map(|&x| q.to_mont(x)).collect();
        v.resize(self.cols, 0);
        for (prow, &pc) in self.rows.iter().zip(&self.pivots) {
            let f = v[pc];
            if f == 0 {
                continue;
            }
            for (x, &y) in v[pc..].iter_mut().zip(&prow[pc..]) {
                *x = q.sub(*x, q.mont_mul(f, y));
            }
        }
        let Some(c) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = q.to_mont(q.inv(q.from_mont(v[c])));
        for x in v[c..].iter_mut() {
            *x = q.mont_mul(*x, inv);
        }
        self.rows.push(v);
        self.pivots.push(c);
        true
    }
}

/// Checks `row = Σ_i row[pivots[i]]·r[i]` exactly for every row, where `r` is a
/// candidate reduced echelon form (identity at the pivot columns) of the
/// integer matrix `rows` restricted to its first `r[i].len()` columns.
pub fn certify_rref(rows: &[Vec<BigInt>], r: &[Vec<Rat>], pivots: &[usize]) -> bool {
    if r.len() != pivots.len() {
        return false;
    }
    let cols = r.first().map(Vec::len).unwrap_or(0);
    for (i, row) in r.iter().enumerate() {
        if row.len() != cols {
            return false;
        }
        for (j, x) in row.iter().enumerate() {
            let expect_zero = j < pivots[i] || (pivots.contains(&j) && j != pivots[i]);
            if j == pivots[i] && !x.is_one() || expect_zero && !x.is_zero() {
                return false;
            }
        }
    }
    // Clear denominators row by row of r so the check is integral.
    let scaled: Vec<(BigInt, Vec<BigInt>)> = r
        .iter()
        .map(|row| {
            let den = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            let ints = row.iter().map(|x| x.numer() * (&den / x.denom())).collect();
            (den, ints)
        })
        .collect();
    let total_den = scaled.iter().fold(BigInt::one(), |acc, (d, _)| acc.lcm(d));
    let factors: Vec<BigInt> = scaled.iter().map(|(d, _)| &total_den / d).collect();
    for row in rows {
        if row.len() < cols {
            return false;
        }
        let coeffs: Vec<BigInt> = pivots
            .iter()
            .zip(&factors)
            .map(|(&pc, f)| &row[pc] * f)
            .collect();
        for j in 0..cols {
            let mut acc = BigInt::zero();
            for (c, (_, ints)) in coeffs.iter().zip(&scaled) {
                if !ints[j].is_zero() && !c.is_zero() {
                    acc += c * &ints[j];
                }
            }
            if acc != &row[j] * &total_den {
                return false;
            }
        }
    }
    true
}

/// Recovers a ragged array of rationals from its images modulo pool primes.
///
/// `image(q)` returns the flattened residues (row lengths `shape`) or `None`
/// when `q` is unsuitable (e.g. a pivot drops). Primes are consumed from the
/// pool starting at `first_prime`. Reconstruction is attempted at growing
/// prime counts; a candidate is accepted once it matches the image modulo a
/// further prime not used to build it.
pub fn lift_rationals<F>(shape: &[usize], first_prime: usize, image: F) -> Result<Vec<Vec<Rat>>>
where
    F: Fn(&Prime) -> Option<Vec<u64>> + Sync,
{
    let total: usize = shape.iter().sum();
    if total == 0 {
        return Ok(shape.iter().map(|_| Vec::new()).collect());
    }
    let mut crts: Vec<Crt> = vec![Crt::new(); total];
    let mut used = 0usize;
    let mut next = first_prime;
    let mut rejected = 0usize;
    let mut target = 1usize;
    let mut candidate: Option<Vec<Vec<Rat>>> = None;
    loop {
        // With a candidate in hand one fresh prime decides; otherwise fetch
        // enough primes to reach the next checkpoint, in parallel.
        let want = if candidate.is_some() { 1 } else { target - used };
        let primes: Vec<Prime> = (next..next + want).map(pool_prime).collect();
        next += want;
        let images = exec::map_slice(&primes, |q| image(q));
        let mut agreed = candidate.is_some();
        for (q, res) in primes.iter().zip(images) {
            let Some(res) = res else {
                rejected += 1;
                agreed = false;
                if rejected > 8 + used / 4 {
                    return Err(Error::Inconsistent(
                        "too many primes rejected while lifting an echelon form".into(),
                    ));
                }
                continue;
            };
            if res.len() != total {
                return Err(Error::Inconsistent("residue image has the wrong shape".into()));
            }
            if let Some(c) = &candidate {
                agreed &= matches_image(c, &res, q);
            }
            for (c, &r) in crts.iter_mut().zip(&res) {
                c.push(q, r);
            }
            used += 1;
        }
        if agreed {
            return Ok(candidate.expect("agreement implies a candidate"));
        }
        if candidate.take().is_some() {
            continue;
        }
        if used < target {
            continue;
        }
        target = (target * 3).div_ceil(2).max(target + 1);
        candidate = reconstruct(shape, &crts);
    }
}

fn matches_image(candidate: &[Vec<Rat>], res: &[u64], q: &Prime) -> bool {
    let mut idx = 0;
    for row in candidate {
        for x in row {
            match q.reduce_ratio(x.numer(), x.denom()) {
                Some(v) if v == res[idx] => {}
                _ => return false,
            }
            idx += 1;
        }
    }
    true
}

/// Rational reconstruction of every entry, sharing a running denominator per
/// row so that most entries need only a multiplication and a size test.
fn reconstruct(shape: &[usize], crts: &[Crt]) -> Option<Vec<Vec<Rat>>> {
    let modulus = crts[0].modulus().clone();
    let mbits = modulus.bits();
    if mbits < 96 {
        return None;
    }
    let mut out = Vec::with_capacity(shape.len());
    let mut idx = 0;
    for &len in shape {
        let mut den = BigInt::one();
        let mut row = Vec::with_capacity(len);
        for c in &crts[idx..idx + len] {
            let y = crate::modp::symmetric_mod(&(c.value() * &den), &modulus);
            if y.is_zero() {
                row.push(Rat::zero());
                continue;
            }
            if y.abs().bits() + den.bits() + 64 <= mbits {
                row.push(Rat::new(y, den.clone()));
                continue;
            }
            let (a, b) = rational_reconstruction(c.value(), &modulus)?;
            if a.bits() + b.bits() + 64 > mbits {
                return None;
            }
            den = den.lcm(&b);
            row.push(Rat::new(a, b));
        }
        idx += len;
        out.push(row);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qseries::rat;

    fn to_mod(rows: &[Vec<i64>], q: &Prime) -> ModMatrix {
        let mut m = ModMatrix::zeros(rows.len(), rows[0].len());
        for (i, r) in rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                m.row_mut(i)[j] = q.from_i64(x);
            }
        }
        m
    }

    #[test]
    fn rational_rref_small() {
        let mut rows = vec![
            vec![rat(0, 1), rat(2, 1), rat(4, 1)],
            vec![rat(1, 1), rat(1, 1), rat(1, 1)],
            vec![rat(1, 1), rat(3, 1), rat(5, 1)],
        ];
        let piv = rref_rational(&mut rows);
        assert_eq!(piv, vec![0, 1]);
        assert_eq!(rows, vec![
            vec![rat(1, 1), rat(0, 1), rat(-1, 1)],
            vec![rat(0, 1), rat(1, 1), rat(2, 1)],
        ]);
    }

    #[test]
    fn modular_rref_agrees_with_rational() {
        let ints = vec![
            vec![3, 1, 4, 1, 5, 9],
            vec![2, 6, 5, 3, 5, 8],
            vec![9, 7, 9, 3, 2, 3],
            vec![5, 3, 13, 5, 15, 26],
        ];
        let mut rows: Vec<Vec<Rat>> = ints
            .iter()
            .map(|r| r.iter().map(|&x| rat(x, 1)).collect())
            .collect();
        let piv = rref_rational(&mut rows);
        let q = pool_prime(3);
        let mut m = to_mod(&ints, &q);
        let piv_q = rref_mod(&mut m, &q);
        assert_eq!(piv, piv_q);
        for (i, row) in rows.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                assert_eq!(q.reduce_ratio(x.numer(), x.denom()).unwrap(), m.row(i)[j]);
            }
        }
        for i in piv.len()..m.rows {
            assert!(m.row(i).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn incremental_echelon_tracks_rank() {
        let q = pool_prime(0);
        let mut e = IncrementalEchelon::new(q, 4);
        assert!(e.insert(&[0, 1, 2, 3]));
        assert!(!e.insert(&[0, 2, 4, 6]));
        assert!(e.insert(&[1, 0, 0, 0]));
        assert!(e.insert(&[0, 0, 0, 5]));
        assert_eq!(e.rank(), 3);
        assert_eq!(e.pivots(), vec![0, 1, 3]);
    }

    #[test]
    fn lifting_recovers_large_fractions() {
        let big: BigInt = BigInt::from(10u32).pow(90) + 7;
        let vals = vec![
            vec![Rat::new(big.clone(), BigInt::from(3)), rat(-5, 7)],
            vec![Rat::new(BigInt::one(), big.clone() * 2 + 1)],
        ];
        let shape = [2, 1];
        let got = lift_rationals(&shape, 0, |q| {
            Some(
                vals.iter()
                    .flatten()
                    .map(|x| q.reduce_ratio(x.numer(), x.denom()).unwrap())
                    .collect(),
            )
        })
        .unwrap();
        assert_eq!(got, vals);
    }

    #[test]
    fn lifting_skips_rejected_primes() {
        let bad = pool_prime(1).value();
        let got = lift_rationals(&[1], 0, |q| {
            if q.value() == bad {
                None
            } else {
                q.reduce_ratio(&BigInt::from(22), &BigInt::from(-9)).map(|x| vec![x])
            }
        })
        .unwrap();
        assert_eq!(got, vec![vec![rat(-22, 9)]]);
    }

    #[test]
    fn certification_detects_errors() {
        let rows = vec![
            vec![BigInt::from(2), BigInt::from(4), BigInt::from(1)],
            vec![BigInt::from(1), BigInt::from(2), BigInt::from(3)],
        ];
        let good = vec![
            vec![rat(1, 1), rat(2, 1), rat(0, 1)],
            vec![rat(0, 1), rat(0, 1), rat(1, 1)],
        ];
        assert!(certify_rref(&rows, &good, &[0, 2]));
        let mut bad = good.clone();
        bad[0][1] = rat(3, 1);
        assert!(!certify_rref(&rows, &bad, &[0, 2]));
    }
}
