//! Exact arithmetic in 𝔊 / N_W, the window-W quotient of 𝔊 = H ⋊ ⟨x⟩.
//!
//! An element is `x^e · ∏ c_i^{a_i} · z` with `i ≤ W` and `z ∈ Z` written in
//! the window basis. H is class 2 (exponent p for odd p; for p = 2 the squares
//! `c_l²` are central). Conjugation by x is `c_i ↦ c_i c_{i+1}`, so that
//! `c_{i+1} = [c_i, x]` with `[a, b] = a⁻¹b⁻¹ab`.
//!
//! [`QuotCtx`] works in 𝔊/Z only (B-parts), which is all that the commutator
//! and square maps into Z depend on.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::fplin::{Fp, FpError, SparseVec};
use crate::zbasis::{canon_z, BasisIndex, ZBasisError, ZLayout};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GsymbError {
    #[error(transparent)]
    ZBasis(#[from] ZBasisError),
    #[error(transparent)]
    Field(#[from] FpError),
    #[error("z({0},{0}) is the identity and not a generator")]
    DegenerateZ(u32),
    #[error("element does not lie in {0}")]
    NotInSubgroup(&'static str),
}

/// Element of 𝔊/N_W.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GElement {
    pub xexp: i64,
    /// exponent vector of `c_1 … c_W`, keyed by the c-index
    pub h: SparseVec,
    /// Z-part, keyed by window ordinal
    pub z: SparseVec,
}

impl GElement {
    pub fn is_identity(&self) -> bool {
        self.xexp == 0 && self.h.is_zero() && self.z.is_zero()
    }

    pub fn in_h(&self) -> bool {
        self.xexp == 0
    }

    pub fn in_z(&self) -> bool {
        self.xexp == 0 && self.h.is_zero()
    }

    /// Smallest i with a nonzero `c_i` exponent.
    pub fn depth(&self) -> Option<u32> {
        self.h.leading().map(|e| e.0)
    }
}

/// Window context: field, window W and Z layout.
#[derive(Debug, Clone)]
pub struct GWindowCtx {
    field: Fp,
    w: u32,
    layout: ZLayout,
    // x acts on H_W with order dividing this
    period: i64,
    zperiod: i64,
}

impl GWindowCtx {
    pub fn new(field: Fp, w: u32) -> Result<Self, GsymbError> {
        let layout = ZLayout::new(field, w)?;
        let p = field.p() as i64;
        let mut ps = 1i64;
        while ps < w as i64 {
            ps *= p;
        }
        Ok(GWindowCtx { field, w, layout, period: ps * p, zperiod: ps })
    }

    #[inline]
    pub fn field(&self) -> Fp {
        self.field
    }

    #[inline]
    pub fn p(&self) -> u8 {
        self.field.p()
    }

    #[inline]
    pub fn window(&self) -> u32 {
        self.w
    }

    #[inline]
    pub fn layout(&self) -> &ZLayout {
        &self.layout
    }

    /// Order of the action of x on H_W divides this.
    pub fn x_period(&self) -> i64 {
        self.period
    }

    pub fn zero_z(&self) -> SparseVec {
        SparseVec::zero(self.field)
    }

    pub fn identity(&self) -> GElement {
        GElement { xexp: 0, h: self.zero_z(), z: self.zero_z() }
    }

    pub fn x_pow(&self, e: i64) -> GElement {
        GElement { xexp: e, ..self.identity() }
    }

    pub fn x(&self) -> GElement {
        self.x_pow(1)
    }

    /// `c_i` (identity when i > W).
    pub fn c(&self, i: u32) -> Result<GElement, GsymbError> {
        if i == 0 {
            return Err(ZBasisError::ZeroIndex.into());
        }
        let mut g = self.identity();
        if i <= self.w {
            g.h = SparseVec::unit(self.field, i);
        }
        Ok(g)
    }

    pub fn y(&self) -> GElement {
        self.c(1).expect("c_1")
    }

    /// `z_{m,n} = [c_m, c_n]` for m ≠ n.
    pub fn z(&self, m: u32, n: u32) -> Result<GElement, GsymbError> {
        if m == n && m != 0 {
            return Err(GsymbError::DegenerateZ(m));
        }
        let (idx, s) = canon_z(m, n)?.expect("m != n");
        let mut g = self.identity();
        if let Some(o) = self.layout.ordinal(idx) {
            g.z = SparseVec::from_terms(self.field, [(o, s as i64)]);
        }
        Ok(g)
    }

    pub fn from_z(&self, z: SparseVec) -> GElement {
        GElement { xexp: 0, h: self.zero_z(), z }
    }

    /// Z-vector of the basis element, or zero outside the window.
    pub fn zvec(&self, idx: BasisIndex) -> SparseVec {
        self.layout.unit(idx).unwrap_or_else(|| self.zero_z())
    }

    /// Z-vector of `[c_m, c_n]` (any m, n ≥ 1).
    pub fn zvec_pair(&self, m: u32, n: u32) -> SparseVec {
        match canon_z(m, n).expect("indices ≥ 1") {
            None => self.zero_z(),
            Some((idx, s)) => match self.layout.ordinal(idx) {
                Some(o) => SparseVec::from_terms(self.field, [(o, s as i64)]),
                None => self.zero_z(),
            },
        }
    }

    // ---- H-level collection -------------------------------------------------

    fn h_mul(&self, ah: &SparseVec, az: &SparseVec, bh: &SparseVec, bz: &SparseVec) -> (SparseVec, SparseVec) {
        let f = self.field;
        let two = f.p() == 2;
        let mut zraw: Vec<(u32, u8)> = Vec::with_capacity(az.nnz() + bz.nnz() + ah.nnz() * bh.nnz());
        zraw.extend_from_slice(az.entries());
        zraw.extend_from_slice(bz.entries());
        // moving c_j (from b) left past c_i (from a), i > j
        for &(i, ai) in ah.entries() {
            for &(j, bj) in bh.entries() {
                if j >= i {
                    break;
                }
                let o = self.layout.ordinal_pair(i, j).expect("in window");
                zraw.push((o, f.mul(ai, bj)));
            }
        }
        let (a, b) = (ah.entries(), bh.entries());
        let mut hraw: Vec<(u32, u8)> = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                hraw.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                hraw.push(b[j]);
                j += 1;
            } else {
                let idx = a[i].0;
                if two {
                    // c_l · c_l = c_l², central
                    zraw.push((self.layout.ordinal_pair(idx, idx).expect("in window"), 1));
                } else {
                    let c = f.add(a[i].1, b[j].1);
                    if c != 0 {
                        hraw.push((idx, c));
                    }
                }
                i += 1;
                j += 1;
            }
        }
        (SparseVec::from_coeffs(f, hraw), SparseVec::from_coeffs(f, zraw))
    }

    fn h_inv(&self, h: &SparseVec, z: &SparseVec) -> (SparseVec, SparseVec) {
        let f = self.field;
        let mut zraw: Vec<(u32, u8)> = z.neg().entries().to_vec();
        let e = h.entries();
        for (t, &(j, aj)) in e.iter().enumerate() {
            for &(i, ai) in &e[..t] {
                zraw.push((self.layout.ordinal_pair(j, i).expect("in window"), f.mul(aj, ai)));
            }
            if f.p() == 2 {
                zraw.push((self.layout.ordinal_pair(j, j).expect("in window"), 1));
            }
        }
        (h.neg(), SparseVec::from_coeffs(f, zraw))
    }

    /// φ(h) = x⁻¹hx on an H-element.
    fn phi(&self, h: &SparseVec, z: &SparseVec) -> (SparseVec, SparseVec) {
        let f = self.field;
        let w = self.w;
        let mut braw: Vec<(u32, u8)> = Vec::with_capacity(2 * h.nnz());
        let mut zraw: Vec<(u32, u8)> = Vec::with_capacity(4 * z.nnz() + h.nnz());
        let e = h.entries();
        for (t, &(i, a)) in e.iter().enumerate() {
            braw.push((i, a));
            if i < w {
                braw.push((i + 1, a));
                if f.p() != 2 {
                    // (c_i c_{i+1})^a = c_i^a c_{i+1}^a z_{i+1,i}^{a(a-1)/2}
                    let c = ((a as u32 * (a as u32 - 1) / 2) % f.p() as u32) as u8;
                    if c != 0 {
                        zraw.push((self.layout.ordinal_pair(i + 1, i).unwrap(), c));
                    }
                }
            }
            if f.p() == 2 && t > 0 && e[t - 1].0 + 1 == i {
                zraw.push((self.layout.ordinal_pair(i, i).unwrap(), 1));
            }
        }
        for &(o, v) in z.entries() {
            self.push_phi_z(o, v, &mut zraw);
        }
        (SparseVec::from_coeffs(f, braw), SparseVec::from_coeffs(f, zraw))
    }

    #[inline]
    fn push_phi_z(&self, o: u32, v: u8, out: &mut Vec<(u32, u8)>) {
        let w = self.w;
        let l = &self.layout;
        match l.index(o) {
            BasisIndex::Com(m, n) => {
                out.push((o, v));
                if m < w {
                    out.push((l.ordinal_pair(m + 1, n).unwrap(), v));
                    out.push((l.ordinal_pair(m + 1, n + 1).unwrap(), v));
                }
                if m > n + 1 {
                    out.push((l.ordinal_pair(m, n + 1).unwrap(), v));
                }
            }
            BasisIndex::CSq(s) => {
                out.push((o, v));
                if s < w {
                    out.push((l.ordinal_pair(s + 1, s + 1).unwrap(), v));
                    out.push((l.ordinal_pair(s + 1, s).unwrap(), v));
                }
            }
        }
    }

    /// φ⁻¹ by forward substitution (φ is unipotent for the weight order).
    fn phi_inv(&self, h: &SparseVec, z: &SparseVec) -> (SparseVec, SparseVec) {
        let f = self.field;
        let hd = h.to_dense(self.w as usize + 1);
        let mut g = alloc::vec![0u8; self.w as usize + 1];
        for i in 1..=self.w as usize {
            g[i] = f.sub(hd[i], g[i - 1]);
        }
        let gh = SparseVec::from_dense(f, &g);
        let (_, zeta) = self.phi(&gh, &self.zero_z());
        let rhs = z.sub(&zeta).expect("same field");
        (gh, self.z_phi_inv(&rhs))
    }

    /// Inverse of the x-action on a Z-vector.
    pub fn z_phi_inv(&self, rhs: &SparseVec) -> SparseVec {
        let f = self.field;
        let mut work: BTreeMap<u32, u8> = rhs.entries().iter().copied().collect();
        let mut out = Vec::new();
        let mut buf = Vec::with_capacity(4);
        while let Some((o, v)) = work.pop_first() {
            if v == 0 {
                continue;
            }
            out.push((o, v));
            buf.clear();
            self.push_phi_z(o, v, &mut buf);
            for &(t, c) in &buf {
                if t != o {
                    let e = work.entry(t).or_insert(0);
                    *e = f.sub(*e, c);
                }
            }
        }
        SparseVec::from_coeffs(f, out)
    }

    /// x-action on a Z-vector.
    pub fn z_phi(&self, z: &SparseVec) -> SparseVec {
        let mut raw = Vec::with_capacity(4 * z.nnz());
        for &(o, v) in z.entries() {
            self.push_phi_z(o, v, &mut raw);
        }
        SparseVec::from_coeffs(self.field, raw)
    }

    /// `[z, x]` for z ∈ Z.
    pub fn z_comm_x(&self, z: &SparseVec) -> SparseVec {
        let mut raw = Vec::with_capacity(3 * z.nnz());
        for &(o, v) in z.entries() {
            self.push_phi_z(o, v, &mut raw);
            raw.push((o, self.field.neg(v)));
        }
        SparseVec::from_coeffs(self.field, raw)
    }

    /// `[z, x, …, x]` with r copies of x.
    pub fn z_comm_x_iter(&self, z: &SparseVec, r: u32) -> SparseVec {
        let mut v = z.clone();
        for _ in 0..r {
            if v.is_zero() {
                break;
            }
            v = self.z_comm_x(&v);
        }
        v
    }

    /// x^{p^t}-action on a Z-vector: the four-term rule
    /// `z_{m,n} ↦ z_{m,n} z_{m+q,n} [c_m,c_{n+q}] z_{m+q,n+q}`, q = p^t.
    pub fn z_phi_pow_pt(&self, z: &SparseVec, q: u32) -> SparseVec {
        let mut raw: Vec<(u32, i64)> = Vec::with_capacity(4 * z.nnz());
        for &(o, v) in z.entries() {
            self.push_phi_q(o, v, q, &mut raw);
        }
        SparseVec::from_terms(self.field, raw)
    }

    fn push_phi_q(&self, o: u32, v: u8, q: u32, out: &mut Vec<(u32, i64)>) {
        let w = self.w;
        let l = &self.layout;
        let v = v as i64;
        let (m, n) = l.index(o).pair();
        out.push((o, v));
        match l.index(o) {
            BasisIndex::Com(..) => {
                if m + q <= w {
                    out.push((l.ordinal_pair(m + q, n).unwrap(), v));
                    out.push((l.ordinal_pair(m + q, n + q).unwrap(), v));
                }
                if n + q <= w {
                    if let Some((idx, s)) = canon_z(m, n + q).unwrap() {
                        out.push((l.ordinal(idx).unwrap(), s as i64 * v));
                    }
                }
            }
            BasisIndex::CSq(s) => {
                if s + q <= w {
                    out.push((l.ordinal_pair(s + q, s + q).unwrap(), v));
                    out.push((l.ordinal_pair(s + q, s).unwrap(), v));
                }
            }
        }
    }

    /// x^f-action on a Z-vector, via base-p digits of f.
    pub fn z_phi_pow(&self, z: &SparseVec, f: i64) -> SparseVec {
        let p = self.p() as i64;
        let mut e = f.rem_euclid(self.zperiod);
        let mut q = 1i64;
        let mut v = z.clone();
        while e > 0 {
            for _ in 0..e % p {
                v = self.z_phi_pow_pt(&v, q as u32);
            }
            e /= p;
            q *= p;
        }
        v
    }

    /// `[z, x^{p^t}, …, x^{p^t}]` with r copies.
    pub fn z_comm_xq_iter(&self, z: &SparseVec, q: u32, r: u32) -> SparseVec {
        let mut v = z.clone();
        for _ in 0..r {
            if v.is_zero() {
                break;
            }
            v = self.z_phi_pow_pt(&v, q).sub(&v).unwrap();
        }
        v
    }

    fn conj_h(&self, h: &SparseVec, z: &SparseVec, f: i64) -> (SparseVec, SparseVec) {
        if f == 0 {
            return (h.clone(), z.clone());
        }
        if h.is_zero() {
            return (h.clone(), self.z_phi_pow(z, f));
        }
        let r = f.rem_euclid(self.period);
        let (mut a, mut b) = (h.clone(), z.clone());
        if r <= self.period - r {
            for _ in 0..r {
                (a, b) = self.phi(&a, &b);
            }
        } else {
            for _ in 0..self.period - r {
                (a, b) = self.phi_inv(&a, &b);
            }
        }
        (a, b)
    }

    // ---- group operations --------------------------------------------------

    pub fn mul(&self, a: &GElement, b: &GElement) -> GElement {
        let (ah, az) = self.conj_h(&a.h, &a.z, b.xexp);
        let (h, z) = self.h_mul(&ah, &az, &b.h, &b.z);
        GElement { xexp: a.xexp + b.xexp, h, z }
    }

    pub fn mul_all<'a, I: IntoIterator<Item = &'a GElement>>(&self, it: I) -> GElement {
        it.into_iter().fold(self.identity(), |acc, g| self.mul(&acc, g))
    }

    pub fn inv(&self, a: &GElement) -> GElement {
        let (ih, iz) = self.h_inv(&a.h, &a.z);
        let (h, z) = self.conj_h(&ih, &iz, -a.xexp);
        GElement { xexp: -a.xexp, h, z }
    }

    /// `[a, b] = a⁻¹b⁻¹ab`.
    pub fn comm(&self, a: &GElement, b: &GElement) -> GElement {
        let ai = self.inv(a);
        let bi = self.inv(b);
        self.mul(&self.mul(&ai, &bi), &self.mul(a, b))
    }

    /// Left-normed `[g_1, g_2, …, g_r]`.
    pub fn comm_left_normed(&self, gs: &[GElement]) -> GElement {
        let mut it = gs.iter();
        let mut acc = it.next().cloned().unwrap_or_else(|| self.identity());
        for g in it {
            acc = self.comm(&acc, g);
        }
        acc
    }

    /// `b⁻¹ab`.
    pub fn conj(&self, a: &GElement, b: &GElement) -> GElement {
        self.mul(&self.mul(&self.inv(b), a), b)
    }

    pub fn pow(&self, a: &GElement, e: i64) -> GElement {
        let mut base = if e < 0 { self.inv(a) } else { a.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = self.identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    /// `[h, x, …, x]` with r copies of x, for h ∈ H.
    pub fn comm_x_iter(&self, h: &GElement, r: u32) -> GElement {
        debug_assert!(h.in_h());
        if h.h.is_zero() {
            return self.from_z(self.z_comm_x_iter(&h.z, r));
        }
        let (mut a, mut b) = (h.h.clone(), h.z.clone());
        for _ in 0..r {
            let (ia, ib) = self.h_inv(&a, &b);
            let (pa, pb) = self.phi(&a, &b);
            (a, b) = self.h_mul(&ia, &ib, &pa, &pb);
        }
        GElement { xexp: 0, h: a, z: b }
    }

    /// w_{i,j,k}: correction term in `[c_i c_j, x, …] = [c_i, x, …][c_j, x, …] w_{i,j,k}`
    /// with p^k − 1 copies of x.
    pub fn w_ijk(&self, i: u32, j: u32, k: u32) -> SparseVec {
        let r = (self.p() as u32).pow(k);
        self.w_chain(i, j, r - 1)
    }

    /// w̃_{i,j,k}, the analogue with p^k − p^{k−1} − 1 leading copies of x.
    pub fn tilde_w(&self, i: u32, j: u32, k: u32) -> SparseVec {
        let p = self.p() as u32;
        self.w_chain(i, j, p.pow(k) - p.pow(k - 1))
    }

    // Σ_{t=1}^{len} [z_{i+t, j+t-1}, x, (len - t)], by Horner's rule
    fn w_chain(&self, i: u32, j: u32, len: u32) -> SparseVec {
        let mut acc = self.zero_z();
        for t in 1..=len {
            acc = self.z_comm_x(&acc);
            acc = acc.add(&self.zvec_pair(i + t, j + t - 1)).unwrap();
        }
        acc
    }

    /// d_k(h) from `(xh)^{p^k} = x^{p^k} [h, x, (p^k − 1)] d_k(h)`.
    pub fn d_k(&self, h: &GElement, k: u32) -> Result<SparseVec, GsymbError> {
        let q = (self.p() as i64).pow(k);
        self.power_defect(h, 1, q, (q - 1) as u32)
    }

    /// d̃_k(h) from `(x^{p^{k−1}} h)^p = x^{p^k} [h, x, (p^k − p^{k−1})] d̃_k(h)`.
    pub fn tilde_d(&self, h: &GElement, k: u32) -> Result<SparseVec, GsymbError> {
        let p = self.p() as i64;
        let q1 = p.pow(k - 1);
        let low_h = h.h.entries().iter().any(|&(i, _)| (i as i64) < q1);
        let low_z = h.z.entries().iter().any(|&(o, _)| (self.layout.index(o).weight() as i64) < q1);
        if low_h || low_z {
            return Err(GsymbError::NotInSubgroup("γ_{p^{k−1}}"));
        }
        self.power_defect(h, q1, p, (p * q1 - q1) as u32)
    }

    fn power_defect(&self, h: &GElement, e: i64, n: i64, r: u32) -> Result<SparseVec, GsymbError> {
        if !h.in_h() {
            return Err(GsymbError::NotInSubgroup("H"));
        }
        let g = self.pow(&self.mul(&self.x_pow(e), h), n);
        let rest = self.mul(&self.x_pow(-e * n), &g);
        let t = self.comm_x_iter(h, r);
        let d = self.mul(&self.inv(&t), &rest);
        if !d.in_z() {
            return Err(GsymbError::NotInSubgroup("Z"));
        }
        Ok(d.z)
    }

    /// Alternating commutator map B × B → Z: `[u, v]` for u, v given by exponent vectors.
    pub fn beta(&self, u: &SparseVec, v: &SparseVec) -> SparseVec {
        let f = self.field;
        let mut raw = Vec::with_capacity(u.nnz() * v.nnz());
        for &(m, a) in u.entries() {
            for &(n, b) in v.entries() {
                if m == n {
                    continue;
                }
                let c = f.mul(a, b);
                if m > n {
                    if let Some(o) = self.layout.ordinal_pair(m, n) {
                        raw.push((o, c));
                    }
                } else if let Some(o) = self.layout.ordinal_pair(n, m) {
                    raw.push((o, f.neg(c)));
                }
            }
        }
        SparseVec::from_coeffs(f, raw)
    }

    /// Square map B → Z for p = 2: `(∏ c_i^{u_i})²`.
    pub fn square_map(&self, u: &SparseVec) -> SparseVec {
        debug_assert_eq!(self.p(), 2);
        let mut raw = Vec::new();
        let e = u.entries();
        for (t, &(i, _)) in e.iter().enumerate() {
            if let Some(o) = self.layout.ordinal_pair(i, i) {
                raw.push((o, 1));
            }
            for &(j, _) in &e[..t] {
                if let Some(o) = self.layout.ordinal_pair(i, j) {
                    raw.push((o, 1));
                }
            }
        }
        SparseVec::from_coeffs(self.field, raw)
    }

    /// Project onto a smaller window (the natural map 𝔊/N_W → 𝔊/N_V, V ≤ W).
    pub fn project(&self, g: &GElement, target: &GWindowCtx) -> GElement {
        assert!(target.w <= self.w && target.field == self.field);
        GElement {
            xexp: g.xexp,
            h: g.h.filter(|i| i <= target.w),
            z: g.z.remap(|o| target.layout.ordinal(self.layout.index(o))),
        }
    }

    /// Uniform random element with |x-exponent| ≤ `xmax` and H-support in `1..=hmax`.
    pub fn random<R: rand::Rng + ?Sized>(&self, rng: &mut R, xmax: i64, hmax: u32) -> GElement {
        let xexp = if xmax > 0 { rng.random_range(-xmax..=xmax) } else { 0 };
        let mut g = self.random_h(rng, hmax);
        g.xexp = xexp;
        g
    }

    /// Random element of H with H-support in `1..=hmax` and a random Z-part
    /// supported on the same indices.
    pub fn random_h<R: rand::Rng + ?Sized>(&self, rng: &mut R, hmax: u32) -> GElement {
        let f = self.field;
        let hmax = hmax.min(self.w);
        let h = SparseVec::from_coeffs(f, (1..=hmax).map(|i| (i, rng.random_range(0..f.p()))));
        let zs = self
            .layout
            .indices()
            .iter()
            .enumerate()
            .filter(|(_, idx)| idx.max_index() <= hmax)
            .map(|(o, _)| (o as u32, rng.random_range(0..f.p())));
        let z = SparseVec::from_coeffs(f, zs.collect::<Vec<_>>());
        GElement { xexp: 0, h, z }
    }

    /// Random Z-vector supported on indices ≤ `max`.
    pub fn random_z<R: rand::Rng + ?Sized>(&self, rng: &mut R, max: u32) -> SparseVec {
        let f = self.field;
        let zs: Vec<(u32, u8)> = self
            .layout
            .indices()
            .iter()
            .enumerate()
            .filter(|(_, idx)| idx.max_index() <= max)
            .map(|(o, _)| (o as u32, rng.random_range(0..f.p())))
            .collect();
        SparseVec::from_coeffs(f, zs)
    }
}

// ---- 𝔊/Z arithmetic -------------------------------------------------------

/// Element `x^e u` of 𝔊/(Z·N_W), u ∈ B_W = F_p[T]/(T^W), c_i ↔ T^{i−1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QElement {
    pub xexp: i64,
    /// dense coefficients, index i − 1 for c_i
    pub b: Vec<u8>,
}

impl QElement {
    pub fn depth(&self) -> Option<u32> {
        self.b.iter().position(|&c| c != 0).map(|i| i as u32 + 1)
    }

    pub fn lead(&self) -> Option<(u32, u8)> {
        self.b.iter().position(|&c| c != 0).map(|i| (i as u32 + 1, self.b[i]))
    }

    pub fn is_b_zero(&self) -> bool {
        self.b.iter().all(|&c| c == 0)
    }

    /// B-part as a sparse vector keyed by c-index.
    pub fn b_sparse(&self, field: Fp) -> SparseVec {
        SparseVec::from_coeffs(field, self.b.iter().enumerate().map(|(i, &c)| (i as u32 + 1, c)))
    }
}

#[derive(Debug, Clone)]
pub struct QuotCtx {
    field: Fp,
    w: u32,
    // (1+T)^{P} = 1 on B_W
    period: i64,
}

impl QuotCtx {
    pub fn new(field: Fp, w: u32) -> Self {
        let p = field.p() as i64;
        let mut ps = 1i64;
        while ps < w as i64 {
            ps *= p;
        }
        QuotCtx { field, w, period: ps }
    }

    pub fn field(&self) -> Fp {
        self.field
    }

    pub fn window(&self) -> u32 {
        self.w
    }

    pub fn identity(&self) -> QElement {
        QElement { xexp: 0, b: alloc::vec![0; self.w as usize] }
    }

    pub fn x_pow(&self, e: i64) -> QElement {
        QElement { xexp: e, ..self.identity() }
    }

    pub fn from_g(&self, g: &GElement) -> QElement {
        let mut q = self.x_pow(g.xexp);
        for &(i, c) in g.h.entries() {
            if i <= self.w {
                q.b[i as usize - 1] = c;
            }
        }
        q
    }

    /// Coefficients of (1+T)^f mod T^W, by Lucas' theorem.
    pub fn binomials(&self, f: i64) -> Vec<u8> {
        let p = self.field.p() as i64;
        let f = f.rem_euclid(self.period);
        (0..self.w as i64)
            .map(|j| {
                let (mut n, mut k, mut acc) = (f, j, 1u8);
                while k > 0 || n > 0 {
                    let (nd, kd) = (n % p, k % p);
                    if kd > nd {
                        return 0;
                    }
                    acc = self.field.mul(acc, small_binom(nd as u32, kd as u32, self.field));
                    n /= p;
                    k /= p;
                }
                acc
            })
            .collect()
    }

    /// (1+T)^f · u.
    pub fn act(&self, u: &[u8], f: i64) -> Vec<u8> {
        if f.rem_euclid(self.period) == 0 {
            return u.to_vec();
        }
        let bin = self.binomials(f);
        let fp = self.field;
        let w = self.w as usize;
        let mut out = alloc::vec![0u8; w];
        for (j, &bj) in bin.iter().enumerate() {
            if bj == 0 {
                continue;
            }
            for i in 0..w - j {
                if u[i] != 0 {
                    out[i + j] = fp.add(out[i + j], fp.mul(bj, u[i]));
                }
            }
        }
        out
    }

    pub fn mul(&self, a: &QElement, b: &QElement) -> QElement {
        let fp = self.field;
        let mut u = self.act(&a.b, b.xexp);
        for (x, &y) in u.iter_mut().zip(&b.b) {
            *x = fp.add(*x, y);
        }
        QElement { xexp: a.xexp + b.xexp, b: u }
    }

    pub fn inv(&self, a: &QElement) -> QElement {
        let fp = self.field;
        let u = self.act(&a.b, -a.xexp);
        QElement { xexp: -a.xexp, b: u.into_iter().map(|c| fp.neg(c)).collect() }
    }

    pub fn pow(&self, a: &QElement, e: i64) -> QElement {
        let mut base = if e < 0 { self.inv(a) } else { a.clone() };
        let mut n = e.unsigned_abs();
        let mut acc = self.identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            n >>= 1;
            if n > 0 {
                base = self.mul(&base, &base);
            }
        }
        acc
    }

    pub fn comm(&self, a: &QElement, b: &QElement) -> QElement {
        let l = self.mul(&self.inv(a), &self.inv(b));
        self.mul(&l, &self.mul(a, b))
    }
}

fn small_binom(n: u32, k: u32, f: Fp) -> u8 {
    let mut num = 1u8;
    let mut den = 1u8;
    for i in 0..k {
        num = f.mul(num, ((n - i) % f.p() as u32) as u8);
        den = f.mul(den, ((i + 1) % f.p() as u32) as u8);
    }
    f.mul(num, f.inv(den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx(p: u32, w: u32) -> GWindowCtx {
        GWindowCtx::new(Fp::new(p).unwrap(), w).unwrap()
    }

    #[test]
    fn c_chain_is_commutator_with_x() {
        for p in [2, 3, 5] {
            let g = ctx(p, 8);
            for i in 1..8 {
                assert_eq!(g.comm(&g.c(i).unwrap(), &g.x()), g.c(i + 1).unwrap());
            }
            assert!(g.comm(&g.c(8).unwrap(), &g.x()).is_identity());
        }
    }

    #[test]
    fn z_is_commutator_of_cs() {
        for p in [2, 3] {
            let g = ctx(p, 7);
            for m in 1..=7 {
                for n in 1..=7 {
                    if m != n {
                        assert_eq!(g.comm(&g.c(m).unwrap(), &g.c(n).unwrap()), g.z(m, n).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn exponent_p_and_central_squares() {
        let g = ctx(2, 6);
        let s = g.pow(&g.c(3).unwrap(), 2);
        assert!(s.in_z());
        assert!(g.pow(&g.c(3).unwrap(), 4).is_identity());
        let g = ctx(3, 6);
        assert!(g.pow(&g.mul(&g.c(2).unwrap(), &g.c(5).unwrap()), 3).is_identity());
    }

    #[test]
    fn inverse_and_associativity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in [2, 3] {
            let g = ctx(p, 9);
            for _ in 0..40 {
                let a = g.random(&mut rng, 5, 9);
                let b = g.random(&mut rng, 5, 9);
                let c = g.random(&mut rng, 5, 9);
                assert!(g.mul(&a, &g.inv(&a)).is_identity());
                assert_eq!(g.mul(&g.mul(&a, &b), &c), g.mul(&a, &g.mul(&b, &c)));
            }
        }
    }

    #[test]
    fn x_period_acts_trivially() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = ctx(2, 6);
        let h = g.random_h(&mut rng, 6);
        let xp = g.x_pow(g.x_period());
        assert_eq!(g.conj(&h, &xp), h);
    }

    #[test]
    fn z_phi_pow_matches_single_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2, 3] {
            let g = ctx(p, 12);
            let z = g.random_z(&mut rng, 6);
            let mut v = z.clone();
            for f in 1..20 {
                v = g.z_phi(&v);
                assert_eq!(g.z_phi_pow(&z, f), v);
            }
            assert_eq!(g.z_phi_inv(&g.z_phi(&z)), z);
        }
    }

    #[test]
    fn quotient_agrees_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for p in [2, 3] {
            let g = ctx(p, 10);
            let q = QuotCtx::new(g.field(), 10);
            for _ in 0..30 {
                let a = g.random(&mut rng, 9, 10);
                let b = g.random(&mut rng, 9, 10);
                assert_eq!(q.from_g(&g.mul(&a, &b)), q.mul(&q.from_g(&a), &q.from_g(&b)));
                assert_eq!(q.from_g(&g.comm(&a, &b)), q.comm(&q.from_g(&a), &q.from_g(&b)));
            }
        }
    }

    #[test]
    fn w111_and_neighbours() {
        let g = ctx(2, 12);
        assert_eq!(g.w_ijk(1, 1, 1), g.zvec_pair(2, 1));
        for k in 1..3 {
            for i in 1..5 {
                assert!(g.w_ijk(i, i + 1, k).is_zero());
            }
        }
    }
}
