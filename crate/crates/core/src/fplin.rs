//! Linear algebra over the prime field F_p.
//!
//! Vectors are sparse (sorted `(index, coeff)` pairs). [`EchelonSpan`] keeps a
//! reduced row-echelon basis; [`BitSpan`] is a dense packed fast path for p = 2.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FpError {
    #[error("{0} is not a supported prime (need a prime below 256)")]
    NotPrime(u32),
    #[error("field mismatch: F_{0} vs F_{1}")]
    FieldMismatch(u8, u8),
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The prime field F_p, p < 256.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    p: u8,
}

impl Fp {
    pub fn new(p: u32) -> Result<Self, FpError> {
        if p >= 256 || !is_prime(p) {
            return Err(FpError::NotPrime(p));
        }
        Ok(Fp { p: p as u8 })
    }

    #[inline]
    pub fn p(self) -> u8 {
        self.p
    }

    #[inline]
    pub fn add(self, a: u8, b: u8) -> u8 {
        ((a as u16 + b as u16) % self.p as u16) as u8
    }

    #[inline]
    pub fn sub(self, a: u8, b: u8) -> u8 {
        ((a as u16 + self.p as u16 - b as u16) % self.p as u16) as u8
    }

    #[inline]
    pub fn neg(self, a: u8) -> u8 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u8, b: u8) -> u8 {
        ((a as u16 * b as u16) % self.p as u16) as u8
    }

    pub fn pow(self, a: u8, mut e: u64) -> u8 {
        let mut base = a % self.p;
        let mut acc = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(self, a: u8) -> u8 {
        debug_assert!(a % self.p != 0, "inverse of zero");
        self.pow(a, self.p as u64 - 2)
    }

    /// Reduce a signed integer into [0, p).
    #[inline]
    pub fn from_i64(self, v: i64) -> u8 {
        v.rem_euclid(self.p as i64) as u8
    }
}

/// Sparse vector over F_p. Entries are sorted by index and never zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SparseVec {
    p: u8,
    entries: Vec<(u32, u8)>,
}

impl fmt::Debug for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.p)?;
        f.debug_map().entries(self.entries.iter().map(|(i, c)| (i, c))).finish()
    }
}

impl SparseVec {
    pub fn zero(field: Fp) -> Self {
        SparseVec { p: field.p, entries: Vec::new() }
    }

    pub fn unit(field: Fp, index: u32) -> Self {
        SparseVec { p: field.p, entries: alloc::vec![(index, 1)] }
    }

    /// Build from arbitrary (possibly repeated, unsorted) signed terms.
    pub fn from_terms<I: IntoIterator<Item = (u32, i64)>>(field: Fp, terms: I) -> Self {
        let mut raw: Vec<(u32, u8)> = terms
            .into_iter()
            .map(|(i, c)| (i, field.from_i64(c)))
            .filter(|&(_, c)| c != 0)
            .collect();
        SparseVec { p: field.p, entries: merge_sorted(field, &mut raw) }
    }

    /// Build from already-reduced coefficients.
    pub fn from_coeffs<I: IntoIterator<Item = (u32, u8)>>(field: Fp, terms: I) -> Self {
        let mut raw: Vec<(u32, u8)> = terms.into_iter().filter(|&(_, c)| c % field.p != 0).collect();
        SparseVec { p: field.p, entries: merge_sorted(field, &mut raw) }
    }

    pub fn from_dense(field: Fp, dense: &[u8]) -> Self {
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, &c)| c % field.p != 0)
            .map(|(i, &c)| (i as u32, c % field.p))
            .collect();
        SparseVec { p: field.p, entries }
    }

    pub fn to_dense(&self, len: usize) -> Vec<u8> {
        let mut out = alloc::vec![0u8; len];
        for &(i, c) in &self.entries {
            if (i as usize) < len {
                out[i as usize] = c;
            }
        }
        out
    }

    #[inline]
    pub fn field(&self) -> Fp {
        Fp { p: self.p }
    }

    #[inline]
    pub fn entries(&self) -> &[(u32, u8)] {
        &self.entries
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: u32) -> u8 {
        match self.entries.binary_search_by_key(&index, |e| e.0) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0,
        }
    }

    /// Smallest index with a nonzero coefficient.
    pub fn leading(&self) -> Option<(u32, u8)> {
        self.entries.first().copied()
    }

    fn check(&self, other: &SparseVec) -> Result<(), FpError> {
        if self.p != other.p {
            Err(FpError::FieldMismatch(self.p, other.p))
        } else {
            Ok(())
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: u8, other: &SparseVec) -> Result<SparseVec, FpError> {
        self.check(other)?;
        let f = self.field();
        let s = s % self.p;
        if s == 0 {
            return Ok(self.clone());
        }
        let (a, b) = (&self.entries, &other.entries);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push((b[j].0, f.mul(s, b[j].1)));
                j += 1;
            } else {
                let c = f.add(a[i].1, f.mul(s, b[j].1));
                if c != 0 {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        Ok(SparseVec { p: self.p, entries: out })
    }

    pub fn add(&self, other: &SparseVec) -> Result<SparseVec, FpError> {
        self.axpy(1, other)
    }

    pub fn sub(&self, other: &SparseVec) -> Result<SparseVec, FpError> {
        self.axpy(self.p - 1, other)
    }

    pub fn scale(&self, s: u8) -> SparseVec {
        let f = self.field();
        let s = s % self.p;
        if s == 0 {
            return SparseVec::zero(f);
        }
        SparseVec { p: self.p, entries: self.entries.iter().map(|&(i, c)| (i, f.mul(s, c))).collect() }
    }

    pub fn neg(&self) -> SparseVec {
        self.scale(self.p - 1)
    }

    /// Keep only coordinates satisfying `keep`.
    pub fn filter<F: FnMut(u32) -> bool>(&self, mut keep: F) -> SparseVec {
        SparseVec { p: self.p, entries: self.entries.iter().copied().filter(|&(i, _)| keep(i)).collect() }
    }

    /// Re-index coordinates; `map` returning `None` drops the coordinate.
    pub fn remap<F: FnMut(u32) -> Option<u32>>(&self, mut map: F) -> SparseVec {
        let f = self.field();
        let mut raw: Vec<(u32, u8)> = self.entries.iter().filter_map(|&(i, c)| map(i).map(|j| (j, c))).collect();
        SparseVec { p: self.p, entries: merge_sorted(f, &mut raw) }
    }
}

/// Sort by index and combine repeated indices, dropping zeros.
pub(crate) fn merge_sorted(f: Fp, raw: &mut Vec<(u32, u8)>) -> Vec<(u32, u8)> {
    raw.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u32, u8)> = Vec::with_capacity(raw.len());
    for &(i, c) in raw.iter() {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 = f.add(last.1, c),
            _ => out.push((i, c)),
        }
        if let Some(last) = out.last() {
            if last.1 == 0 {
                out.pop();
            }
        }
    }
    out
}

/// Reduced row-echelon basis of a subspace of F_p^(∞).
///
/// Rows are normalised (pivot coefficient 1); no row has a nonzero entry in
/// another row's pivot column.
#[derive(Clone, Debug)]
pub struct EchelonSpan {
    field: Fp,
    rows: Vec<SparseVec>,
    pivot_row: BTreeMap<u32, usize>,
    // non-pivot column -> rows with a nonzero entry there
    occ: BTreeMap<u32, BTreeSet<usize>>,
}

impl EchelonSpan {
    pub fn new(field: Fp) -> Self {
        EchelonSpan { field, rows: Vec::new(), pivot_row: BTreeMap::new(), occ: BTreeMap::new() }
    }

    pub fn from_vectors<'a, I: IntoIterator<Item = &'a SparseVec>>(field: Fp, vs: I) -> Result<Self, FpError> {
        let mut s = Self::new(field);
        for v in vs {
            s.insert(v)?;
        }
        Ok(s)
    }

    pub fn field(&self) -> Fp {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn pivots(&self) -> impl Iterator<Item = u32> + '_ {
        self.pivot_row.keys().copied()
    }

    pub fn is_pivot(&self, col: u32) -> bool {
        self.pivot_row.contains_key(&col)
    }

    /// Residue of `v` modulo the span: zero iff `v` lies in the span.
    pub fn reduce(&self, v: &SparseVec) -> Result<SparseVec, FpError> {
        if v.p != self.field.p {
            return Err(FpError::FieldMismatch(self.field.p, v.p));
        }
        let f = self.field;
        let mut raw: Vec<(u32, u8)> = Vec::with_capacity(v.nnz());
        let mut hit = false;
        for &(c, a) in &v.entries {
            match self.pivot_row.get(&c) {
                Some(&r) => {
                    hit = true;
                    let s = f.neg(a);
                    for &(j, b) in &self.rows[r].entries {
                        if j != c {
                            raw.push((j, f.mul(s, b)));
                        }
                    }
                }
                None => raw.push((c, a)),
            }
        }
        if !hit {
            return Ok(v.clone());
        }
        Ok(SparseVec { p: f.p, entries: merge_sorted(f, &mut raw) })
    }

    pub fn contains(&self, v: &SparseVec) -> Result<bool, FpError> {
        Ok(self.reduce(v)?.is_zero())
    }

    /// Insert `v`; returns the residue (zero iff `v` was already in the span).
    pub fn insert(&mut self, v: &SparseVec) -> Result<SparseVec, FpError> {
        let res = self.reduce(v)?;
        if res.is_zero() {
            return Ok(res);
        }
        let f = self.field;
        let (q, lead) = res.leading().expect("nonzero");
        let row = res.scale(f.inv(lead));
        let idx = self.rows.len();
        // eliminate the new pivot column from existing rows
        if let Some(users) = self.occ.remove(&q) {
            for r in users {
                let old = core::mem::replace(&mut self.rows[r], SparseVec::zero(f));
                let s = f.neg(old.get(q));
                let new = old.axpy(s, &row)?;
                self.reindex(r, &old, &new, Some(q));
                self.rows[r] = new;
            }
        }
        for &(j, _) in &row.entries {
            if j != q {
                self.occ.entry(j).or_default().insert(idx);
            }
        }
        self.pivot_row.insert(q, idx);
        self.rows.push(row);
        Ok(res)
    }

    fn reindex(&mut self, r: usize, old: &SparseVec, new: &SparseVec, skip: Option<u32>) {
        let piv = new.leading().map(|e| e.0);
        for &(j, _) in &old.entries {
            if Some(j) != piv && Some(j) != skip && new.get(j) == 0 {
                if let Some(set) = self.occ.get_mut(&j) {
                    set.remove(&r);
                    if set.is_empty() {
                        self.occ.remove(&j);
                    }
                }
            }
        }
        for &(j, _) in &new.entries {
            if Some(j) != piv && old.get(j) == 0 {
                self.occ.entry(j).or_default().insert(r);
            }
        }
    }

    /// Is `self` contained in `other`?
    pub fn is_subspace_of(&self, other: &EchelonSpan) -> Result<bool, FpError> {
        for r in &self.rows {
            if !other.contains(r)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// dim span(A ∪ B) − dim span(B): log_p of the index |⟨A,B⟩ : ⟨B⟩|.
pub fn quotient_dim(field: Fp, a: &[SparseVec], b: &[SparseVec]) -> Result<usize, FpError> {
    let mut s = EchelonSpan::from_vectors(field, b)?;
    let base = s.dim();
    for v in a {
        s.insert(v)?;
    }
    Ok(s.dim() - base)
}

/// Dense echelon span over F_2 with packed rows over a fixed column range.
#[derive(Clone, Debug)]
pub struct BitSpan {
    ncols: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
    pivot_row: Vec<usize>,
}

impl BitSpan {
    pub fn new(ncols: usize) -> Self {
        BitSpan { ncols, words: ncols.div_ceil(64), rows: Vec::new(), pivot_row: alloc::vec![usize::MAX; ncols] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    fn pack(&self, v: &SparseVec) -> Vec<u64> {
        let mut w = alloc::vec![0u64; self.words];
        for &(i, c) in v.entries() {
            let i = i as usize;
            assert!(i < self.ncols, "column {i} outside BitSpan range {}", self.ncols);
            if c & 1 == 1 {
                w[i / 64] ^= 1 << (i % 64);
            }
        }
        w
    }

    fn reduce_words(&self, w: &mut [u64]) {
        // a row is zero left of its pivot, so one forward scan suffices
        let mut col = 0usize;
        while let Some(c) = next_bit(w, col) {
            let r = self.pivot_row[c];
            if r != usize::MAX {
                let row = &self.rows[r];
                for k in c / 64..self.words {
                    w[k] ^= row[k];
                }
            }
            col = c + 1;
        }
    }

    /// Insert; returns true if the vector was independent.
    pub fn insert(&mut self, v: &SparseVec) -> bool {
        assert_eq!(v.field().p(), 2, "BitSpan is F_2 only");
        let mut w = self.pack(v);
        self.reduce_words(&mut w);
        match first_bit(&w) {
            None => false,
            Some(col) => {
                self.pivot_row[col] = self.rows.len();
                self.rows.push(w);
                true
            }
        }
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        let mut w = self.pack(v);
        self.reduce_words(&mut w);
        first_bit(&w).is_none()
    }
}

fn next_bit(w: &[u64], from: usize) -> Option<usize> {
    let mut wi = from / 64;
    if wi >= w.len() {
        return None;
    }
    let mut word = w[wi] & (!0u64 << (from % 64));
    loop {
        if word != 0 {
            return Some(wi * 64 + word.trailing_zeros() as usize);
        }
        wi += 1;
        if wi == w.len() {
            return None;
        }
        word = w[wi];
    }
}

fn first_bit(w: &[u64]) -> Option<usize> {
    w.iter().enumerate().find(|(_, &x)| x != 0).map(|(i, &x)| i * 64 + x.trailing_zeros() as usize)
}

/// Rank of a vector family.
///
/// Unit vectors are taken out first (their columns are killed), the remaining
/// vectors are restricted to the surviving columns, compressed, and ranked on
/// the packed F_2 path when dense enough.
pub fn rank(field: Fp, vs: &[SparseVec]) -> Result<usize, FpError> {
    for v in vs {
        if v.field() != field {
            return Err(FpError::FieldMismatch(field.p(), v.field().p()));
        }
    }
    let mut killed: Vec<u32> = vs.iter().filter(|v| v.nnz() == 1).map(|v| v.entries[0].0).collect();
    killed.sort_unstable();
    killed.dedup();
    let rest: Vec<&SparseVec> = vs.iter().filter(|v| v.nnz() > 1).collect();
    if rest.is_empty() {
        return Ok(killed.len());
    }
    let mut cols: Vec<u32> = Vec::new();
    let reduced: Vec<SparseVec> = rest
        .iter()
        .map(|v| v.filter(|c| killed.binary_search(&c).is_err()))
        .filter(|v| !v.is_zero())
        .inspect(|v| cols.extend(v.entries.iter().map(|e| e.0)))
        .collect();
    cols.sort_unstable();
    cols.dedup();
    let compressed: Vec<SparseVec> =
        reduced.iter().map(|v| v.remap(|c| cols.binary_search(&c).ok().map(|i| i as u32))).collect();
    Ok(killed.len() + rank_dense_or_sparse(field, &compressed, cols.len()))
}

fn rank_dense_or_sparse(field: Fp, vs: &[SparseVec], ncols: usize) -> usize {
    if field.p() == 2 && ncols <= 1 << 15 {
        let nnz: usize = vs.iter().map(|v| v.nnz()).sum();
        if nnz > 4 * vs.len() || ncols <= 4096 {
            let mut s = BitSpan::new(ncols);
            for v in vs {
                s.insert(v);
                if s.dim() == ncols {
                    break;
                }
            }
            return s.dim();
        }
    }
    let mut s = EchelonSpan::new(field);
    for v in vs {
        s.insert(v).expect("same field");
    }
    s.dim()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_ops() {
        let f = Fp::new(7).unwrap();
        for a in 1..7 {
            assert_eq!(f.mul(a, f.inv(a)), 1);
        }
        assert_eq!(f.from_i64(-1), 6);
        assert!(Fp::new(9).is_err());
    }

    #[test]
    fn rref_keeps_pivot_columns_clean() {
        let f = Fp::new(3).unwrap();
        let mut s = EchelonSpan::new(f);
        s.insert(&SparseVec::from_terms(f, [(0, 1), (2, 1), (5, 2)])).unwrap();
        s.insert(&SparseVec::from_terms(f, [(2, 1), (3, 1)])).unwrap();
        s.insert(&SparseVec::from_terms(f, [(5, 1)])).unwrap();
        for (i, r) in s.rows().iter().enumerate() {
            for q in s.pivots() {
                let owner = s.pivot_row[&q];
                if owner != i {
                    assert_eq!(r.get(q), 0);
                }
            }
        }
        assert!(s.contains(&SparseVec::from_terms(f, [(0, 1), (3, 2)])).unwrap());
    }

    #[test]
    fn mismatch_errors() {
        let a = SparseVec::unit(Fp::new(2).unwrap(), 0);
        let b = SparseVec::unit(Fp::new(3).unwrap(), 0);
        assert_eq!(a.add(&b), Err(FpError::FieldMismatch(2, 3)));
    }

    #[test]
    fn bitspan_agrees_with_sparse() {
        let f = Fp::new(2).unwrap();
        let vs: Vec<SparseVec> = (0..40u32)
            .map(|i| SparseVec::from_terms(f, (0..6).map(|j| ((i * 7 + j * 13) % 97, 1))))
            .collect();
        let mut b = BitSpan::new(128);
        for v in &vs {
            b.insert(v);
        }
        assert_eq!(b.dim(), EchelonSpan::from_vectors(f, &vs).unwrap().dim());
    }
}
