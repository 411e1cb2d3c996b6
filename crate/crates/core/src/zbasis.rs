//! Basis of the central subgroup Z and its window layouts.
//!
//! Z has F_p-basis `z_{m,n} = [c_m, c_n]` (m > n ≥ 1), plus the squares `c_l²`
//! when p = 2. Indices are ordered weight-major: `CSq(l)` counts as the pair
//! (l, l), and pairs are compared by (m + n, m).

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::fplin::{Fp, SparseVec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZBasisError {
    #[error("generator indices start at 1")]
    ZeroIndex,
    #[error("window must be at least 1")]
    EmptyWindow,
    #[error("squares c_l^2 are basis elements only for p = 2")]
    SquareForOddP,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisIndex {
    /// `c_l²` (p = 2 only).
    CSq(u32),
    /// `z_{m,n} = [c_m, c_n]`, m > n ≥ 1.
    Com(u32, u32),
}

impl BasisIndex {
    /// Pair used for ordering and index bounds.
    #[inline]
    pub fn pair(self) -> (u32, u32) {
        match self {
            BasisIndex::CSq(l) => (l, l),
            BasisIndex::Com(m, n) => (m, n),
        }
    }

    #[inline]
    pub fn weight(self) -> u32 {
        let (m, n) = self.pair();
        m + n
    }

    #[inline]
    pub fn max_index(self) -> u32 {
        self.pair().0
    }

    #[inline]
    pub fn min_index(self) -> u32 {
        self.pair().1
    }
}

impl Ord for BasisIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.pair(), other.pair());
        (a.0 + a.1, a.0).cmp(&(b.0 + b.1, b.0))
    }
}

impl PartialOrd for BasisIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical form of `[c_m, c_n]`: `None` for m = n (identity), otherwise the
/// basis index and the exponent sign (−1 when the indices were swapped).
pub fn canon_z(m: u32, n: u32) -> Result<Option<(BasisIndex, i8)>, ZBasisError> {
    if m == 0 || n == 0 {
        return Err(ZBasisError::ZeroIndex);
    }
    Ok(match m.cmp(&n) {
        Ordering::Equal => None,
        Ordering::Greater => Some((BasisIndex::Com(m, n), 1)),
        Ordering::Less => Some((BasisIndex::Com(n, m), -1)),
    })
}

/// A factor in a Z-word, before canonicalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZFactor {
    /// `[c_m, c_n]^e`, any m, n ≥ 1.
    Com { m: u32, n: u32, e: i64 },
    /// `(c_l²)^e`, p = 2 only.
    Sq { l: u32, e: i64 },
}

/// Dense ordinal layout of the basis elements with all indices ≤ W.
#[derive(Debug, Clone)]
pub struct ZLayout {
    field: Fp,
    w: u32,
    // (m, n) -> ordinal + 1, 0 for absent; stride w + 1
    table: Vec<u32>,
    indices: Vec<BasisIndex>,
}

impl ZLayout {
    pub fn new(field: Fp, w: u32) -> Result<Self, ZBasisError> {
        if w == 0 {
            return Err(ZBasisError::EmptyWindow);
        }
        let indices = enumerate_window(field, w);
        let stride = w as usize + 1;
        let mut table = alloc::vec![0u32; stride * stride];
        for (o, idx) in indices.iter().enumerate() {
            let (m, n) = idx.pair();
            table[m as usize * stride + n as usize] = o as u32 + 1;
        }
        Ok(ZLayout { field, w, table, indices })
    }

    #[inline]
    pub fn field(&self) -> Fp {
        self.field
    }

    #[inline]
    pub fn window(&self) -> u32 {
        self.w
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    #[inline]
    pub fn indices(&self) -> &[BasisIndex] {
        &self.indices
    }

    #[inline]
    pub fn index(&self, ord: u32) -> BasisIndex {
        self.indices[ord as usize]
    }

    /// Ordinal of a basis element; `None` if it lies outside the window.
    #[inline]
    pub fn ordinal(&self, idx: BasisIndex) -> Option<u32> {
        let (m, n) = idx.pair();
        if m > self.w || n == 0 {
            return None;
        }
        let v = self.table[m as usize * (self.w as usize + 1) + n as usize];
        if v == 0 {
            None
        } else {
            Some(v - 1)
        }
    }

    /// Ordinal of the pair (m, n) read as `CSq` when m = n, `Com` otherwise.
    #[inline]
    pub fn ordinal_pair(&self, m: u32, n: u32) -> Option<u32> {
        if m > self.w || n > self.w || m == 0 || n == 0 {
            return None;
        }
        let v = self.table[m as usize * (self.w as usize + 1) + n as usize];
        if v == 0 {
            None
        } else {
            Some(v - 1)
        }
    }

    pub fn unit(&self, idx: BasisIndex) -> Option<SparseVec> {
        self.ordinal(idx).map(|o| SparseVec::unit(self.field, o))
    }

    /// Vector of a product of Z-factors modulo everything outside the window.
    pub fn project_window(&self, factors: &[ZFactor]) -> Result<SparseVec, ZBasisError> {
        let mut terms = Vec::new();
        for f in factors {
            match *f {
                ZFactor::Com { m, n, e } => {
                    if let Some((idx, s)) = canon_z(m, n)? {
                        if let Some(o) = self.ordinal(idx) {
                            terms.push((o, e * s as i64));
                        }
                    }
                }
                ZFactor::Sq { l, e } => {
                    if l == 0 {
                        return Err(ZBasisError::ZeroIndex);
                    }
                    if self.field.p() != 2 {
                        return Err(ZBasisError::SquareForOddP);
                    }
                    if let Some(o) = self.ordinal(BasisIndex::CSq(l)) {
                        terms.push((o, e));
                    }
                }
            }
        }
        Ok(SparseVec::from_terms(self.field, terms))
    }
}

/// All basis elements with indices ≤ W, in weight-major order.
pub fn enumerate_window(field: Fp, w: u32) -> Vec<BasisIndex> {
    let mut out = Vec::new();
    for s in 2..=2 * w {
        let lo = s.div_ceil(2);
        let hi = w.min(s - 1);
        for m in lo..=hi {
            let n = s - m;
            if m > n {
                out.push(BasisIndex::Com(m, n));
            } else if m == n && field.p() == 2 {
                out.push(BasisIndex::CSq(m));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims() {
        let f2 = Fp::new(2).unwrap();
        let f3 = Fp::new(3).unwrap();
        assert_eq!(ZLayout::new(f2, 10).unwrap().dim(), 45 + 10);
        assert_eq!(ZLayout::new(f3, 10).unwrap().dim(), 45);
    }

    #[test]
    fn ordinals_are_sorted_and_roundtrip() {
        let l = ZLayout::new(Fp::new(2).unwrap(), 12).unwrap();
        for w in l.indices().windows(2) {
            assert!(w[0] < w[1]);
        }
        for (o, &idx) in l.indices().iter().enumerate() {
            assert_eq!(l.ordinal(idx), Some(o as u32));
        }
        assert_eq!(l.ordinal(BasisIndex::Com(13, 1)), None);
    }

    #[test]
    fn canonical_signs() {
        assert_eq!(canon_z(2, 5).unwrap(), Some((BasisIndex::Com(5, 2), -1)));
        assert_eq!(canon_z(4, 4).unwrap(), None);
        assert!(canon_z(0, 1).is_err());
    }
}
