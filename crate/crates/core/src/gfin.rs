//! Finite quotients G_k = H_k ⋊ ⟨x_k⟩ of 𝔊, used as an independent oracle.
//!
//! H_k is the free class-2 group (exponent p, central squares for p = 2) on
//! `b_0 … b_{q−1}`, q = p^k, and x_k (of order q) permutes them cyclically,
//! `b_j^{x_k} = b_{j+1}`. Normal form: `x_k^e · b_0^{a_0} ⋯ b_{q−1}^{a_{q−1}} · z`,
//! with Z_k coordinates `b_j²` (p = 2) and `u_{j,i} = [b_j, b_i]` for j > i.
//!
//! Subgroups are stored as induced generating sequences with three layers
//! (x-exponent, B-part echelon, Z-span) and built by sifting plus closure.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::fplin::{EchelonSpan, Fp, SparseVec};
use crate::gsymb::{GElement, GWindowCtx};
use crate::zbasis::BasisIndex;

/// Largest Z_k dimension accepted by [`FinGroup::new`].
pub const MAX_ZDIM: usize = 5000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GfinError {
    #[error("G_{k} for p = {p} has Z-dimension {zdim}, above the oracle guard {MAX_ZDIM}")]
    TooLarge { p: u8, k: u32, zdim: usize },
    #[error("window {w} is too small to map into G_k: c_{next} is not trivial there")]
    WindowTooSmall { w: u32, next: u32 },
    #[error("field mismatch between window context and finite quotient")]
    FieldMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FinElement {
    pub e: u32,
    pub b: Vec<u8>,
    pub z: Vec<u8>,
}

impl FinElement {
    pub fn is_identity(&self) -> bool {
        self.e == 0 && self.b.iter().all(|&c| c == 0) && self.z.iter().all(|&c| c == 0)
    }

    pub fn in_h(&self) -> bool {
        self.e == 0
    }

    pub fn in_z(&self) -> bool {
        self.e == 0 && self.b.iter().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone)]
pub struct FinGroup {
    field: Fp,
    k: u32,
    q: usize,
    sq_off: usize,
    zdim: usize,
}

impl FinGroup {
    pub fn new(field: Fp, k: u32) -> Result<Self, GfinError> {
        let q = (field.p() as usize).pow(k);
        let sq_off = if field.p() == 2 { q } else { 0 };
        let zdim = sq_off + q * (q - 1) / 2;
        if zdim > MAX_ZDIM {
            return Err(GfinError::TooLarge { p: field.p(), k, zdim });
        }
        Ok(FinGroup { field, k, q, sq_off, zdim })
    }

    pub fn field(&self) -> Fp {
        self.field
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// q = p^k, the order of x_k.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn zdim(&self) -> usize {
        self.zdim
    }

    /// log_p |G_k| from the normal form.
    pub fn log_order(&self) -> usize {
        self.k as usize + self.q + self.zdim
    }

    #[inline]
    fn pair(&self, j: usize, i: usize) -> usize {
        debug_assert!(j > i);
        self.sq_off + j * (j - 1) / 2 + i
    }

    // coordinate and sign of [b_a, b_b]
    #[inline]
    fn comm_coord(&self, a: usize, b: usize) -> Option<(usize, bool)> {
        use core::cmp::Ordering::*;
        match a.cmp(&b) {
            Equal => None,
            Greater => Some((self.pair(a, b), false)),
            Less => Some((self.pair(b, a), true)),
        }
    }

    pub fn identity(&self) -> FinElement {
        FinElement { e: 0, b: alloc::vec![0; self.q], z: alloc::vec![0; self.zdim] }
    }

    pub fn x(&self) -> FinElement {
        FinElement { e: 1 % self.q as u32, ..self.identity() }
    }

    pub fn x_pow(&self, e: i64) -> FinElement {
        FinElement { e: e.rem_euclid(self.q as i64) as u32, ..self.identity() }
    }

    pub fn b(&self, j: usize) -> FinElement {
        let mut g = self.identity();
        g.b[j % self.q] = 1;
        g
    }

    pub fn y(&self) -> FinElement {
        self.b(0)
    }

    pub fn generators(&self) -> [FinElement; 2] {
        [self.x(), self.y()]
    }

    // product of H-normal forms (a, za)(b, zb)
    fn h_mul(&self, a: &[u8], za: &[u8], b: &[u8], zb: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let f = self.field;
        let mut z: Vec<u8> = za.iter().zip(zb).map(|(&x, &y)| f.add(x, y)).collect();
        let mut h = alloc::vec![0u8; self.q];
        for i in 0..self.q {
            if a[i] == 0 {
                continue;
            }
            for j in 0..i {
                if b[j] != 0 {
                    let o = self.pair(i, j);
                    z[o] = f.add(z[o], f.mul(a[i], b[j]));
                }
            }
        }
        for i in 0..self.q {
            if f.p() == 2 {
                h[i] = a[i] ^ b[i];
                if a[i] == 1 && b[i] == 1 {
                    z[i] ^= 1;
                }
            } else {
                h[i] = f.add(a[i], b[i]);
            }
        }
        (h, z)
    }

    // x_k^{-s} h x_k^{s}: b_j -> b_{j+s}, then re-collect the wrapped block
    fn shift(&self, a: &[u8], za: &[u8], s: usize) -> (Vec<u8>, Vec<u8>) {
        let s = s % self.q;
        if s == 0 {
            return (a.to_vec(), za.to_vec());
        }
        let f = self.field;
        let q = self.q;
        let mut h = alloc::vec![0u8; q];
        let mut z = alloc::vec![0u8; self.zdim];
        for j in 0..q {
            h[(j + s) % q] = a[j];
        }
        if f.p() == 2 {
            for j in 0..q {
                z[(j + s) % q] = za[j];
            }
        }
        for j in 1..q {
            for i in 0..j {
                let c = za[self.pair(j, i)];
                if c == 0 {
                    continue;
                }
                let (o, neg) = self.comm_coord((j + s) % q, (i + s) % q).unwrap();
                z[o] = f.add(z[o], if neg { f.neg(c) } else { c });
            }
        }
        // U = b_s.. b_{q-1} block came first, V = b_0..b_{s-1}: UV = VU[U,V]
        for i in s..q {
            if h[i] == 0 {
                continue;
            }
            for j in 0..s {
                if h[j] != 0 {
                    let o = self.pair(i, j);
                    z[o] = f.add(z[o], f.mul(h[i], h[j]));
                }
            }
        }
        (h, z)
    }

    pub fn mul(&self, a: &FinElement, b: &FinElement) -> FinElement {
        let (sh, sz) = self.shift(&a.b, &a.z, b.e as usize);
        let (h, z) = self.h_mul(&sh, &sz, &b.b, &b.z);
        FinElement { e: ((a.e as usize + b.e as usize) % self.q) as u32, b: h, z }
    }

    pub fn inv(&self, a: &FinElement) -> FinElement {
        let f = self.field;
        let mut z: Vec<u8> = a.z.iter().map(|&c| f.neg(c)).collect();
        for j in 0..self.q {
            if a.b[j] == 0 {
                continue;
            }
            for i in 0..j {
                if a.b[i] != 0 {
                    let o = self.pair(j, i);
                    z[o] = f.add(z[o], f.mul(a.b[j], a.b[i]));
                }
            }
            if f.p() == 2 {
                z[j] ^= 1;
            }
        }
        let h: Vec<u8> = a.b.iter().map(|&c| f.neg(c)).collect();
        let back = (self.q - a.e as usize) % self.q;
        let (h, z) = self.shift(&h, &z, back);
        FinElement { e: back as u32, b: h, z }
    }

    pub fn pow(&self, a: &FinElement, e: i64) -> FinElement {
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

    pub fn comm(&self, a: &FinElement, b: &FinElement) -> FinElement {
        let l = self.mul(&self.inv(a), &self.inv(b));
        self.mul(&l, &self.mul(a, b))
    }

    pub fn conj(&self, a: &FinElement, b: &FinElement) -> FinElement {
        self.mul(&self.mul(&self.inv(b), a), b)
    }

    pub fn from_z(&self, z: Vec<u8>) -> FinElement {
        FinElement { z, ..self.identity() }
    }

    /// Images `C_1 = y_k, C_{i+1} = [C_i, x_k]` of the c_i, until trivial.
    pub fn c_images(&self, max: u32) -> Vec<FinElement> {
        let x = self.x();
        let mut out = alloc::vec![self.identity(), self.y()];
        while (out.len() as u32) <= max {
            let next = self.comm(out.last().unwrap(), &x);
            out.push(next);
        }
        out
    }

    /// Smallest W such that c_{W+1} maps to 1 (so that 𝔊/N_W → G_k exists).
    pub fn min_embed_window(&self) -> u32 {
        let x = self.x();
        let mut c = self.y();
        let mut i = 1;
        while !c.is_identity() {
            c = self.comm(&c, &x);
            i += 1;
        }
        i - 1
    }

    /// The whole group as a subgroup.
    pub fn whole(&self) -> FinSubgroup {
        self.subgroup(&self.generators())
    }

    pub fn subgroup(&self, gens: &[FinElement]) -> FinSubgroup {
        let mut s = FinSubgroup::trivial(self);
        s.extend(self, gens, &[]);
        s
    }

    /// Normal closure in G_k.
    pub fn normal_closure(&self, gens: &[FinElement]) -> FinSubgroup {
        let mut s = FinSubgroup::trivial(self);
        s.extend(self, gens, &self.generators());
        s
    }

    pub fn trivial(&self) -> FinSubgroup {
        FinSubgroup::trivial(self)
    }

    /// [A, B] for normal subgroups A, B.
    pub fn commutator_subgroup(&self, a: &FinSubgroup, b: &FinSubgroup) -> FinSubgroup {
        let sa = a.sequence(self);
        let sb = b.sequence(self);
        let mut gens = Vec::new();
        for u in &sa {
            for v in &sb {
                let c = self.comm(u, v);
                if !c.is_identity() {
                    gens.push(c);
                }
            }
        }
        self.normal_closure(&gens)
    }

    /// Normal closure of the union of subgroups and extra elements.
    pub fn join(&self, parts: &[&FinSubgroup], extra: &[FinElement]) -> FinSubgroup {
        let mut gens: Vec<FinElement> = extra.to_vec();
        for s in parts {
            gens.extend(s.sequence(self));
        }
        self.normal_closure(&gens)
    }

    /// A^p[A, A]… helper: normal closure of p-th powers of a generating sequence of A.
    fn gen_powers(&self, a: &FinSubgroup) -> Vec<FinElement> {
        let p = self.field.p() as i64;
        a.sequence(self).iter().map(|g| self.pow(g, p)).filter(|g| !g.is_identity()).collect()
    }

    /// γ_1 = G, γ_{i+1} = [γ_i, G], until trivial.
    pub fn lower_central_series(&self) -> Vec<FinSubgroup> {
        let g = self.whole();
        let mut out = alloc::vec![g.clone()];
        loop {
            let next = self.commutator_subgroup(out.last().unwrap(), &g);
            let done = next.log_order(self) == 0;
            out.push(next);
            if done {
                return out;
            }
        }
    }

    /// P_1 = G, P_{i+1} = P_i^p [P_i, G], until trivial.
    pub fn lower_p_series(&self) -> Vec<FinSubgroup> {
        let g = self.whole();
        let mut out = alloc::vec![g.clone()];
        loop {
            let last = out.last().unwrap();
            let c = self.commutator_subgroup(last, &g);
            // modulo [P_i, G], P_i is central, so generator powers suffice
            let next = self.join(&[&c], &self.gen_powers(last));
            let done = next.log_order(self) == 0;
            out.push(next);
            if done {
                return out;
            }
        }
    }

    /// Jennings series D_1 = G, D_n = D_{⌈n/p⌉}^p ∏_{a+b=n} [D_a, D_b], until trivial.
    pub fn dimension_series(&self) -> Vec<FinSubgroup> {
        let p = self.field.p() as usize;
        // index 0 unused
        let mut d: Vec<FinSubgroup> = alloc::vec![self.whole(), self.whole()];
        loop {
            let n = d.len();
            let mut comms = Vec::new();
            for a in 1..n {
                let b = n - a;
                if a > b {
                    break;
                }
                comms.push(self.commutator_subgroup(&d[a], &d[b]));
            }
            let refs: Vec<&FinSubgroup> = comms.iter().collect();
            // [D_m, D_m] ⊆ the commutator part for m = ⌈n/p⌉, so generator powers suffice
            let next = self.join(&refs, &self.gen_powers(&d[n.div_ceil(p)]));
            let done = next.log_order(self) == 0;
            d.push(next);
            if done {
                d.remove(0);
                return d;
            }
        }
    }

    /// Φ_0 = G, Φ_{i+1} = Φ(Φ_i) = Φ_i^p [Φ_i, Φ_i], until trivial.
    pub fn frattini_series(&self) -> Vec<FinSubgroup> {
        let mut out = alloc::vec![self.whole()];
        loop {
            let last = out.last().unwrap();
            let c = self.commutator_subgroup(last, last);
            let next = self.join(&[&c], &self.gen_powers(last));
            let done = next.log_order(self) == 0;
            out.push(next);
            if done {
                return out;
            }
        }
    }

    /// ⟨g^p : g ∈ A⟩ for a normal subgroup A, by random sampling plus the
    /// powers of generator products. May only undershoot, never overshoot.
    pub fn power_subgroup<R: Rng + ?Sized>(&self, a: &FinSubgroup, rng: &mut R, samples: usize) -> FinSubgroup {
        let p = self.field.p() as i64;
        let seq = a.sequence(self);
        let mut gens = Vec::new();
        for (i, u) in seq.iter().enumerate() {
            gens.push(self.pow(u, p));
            for v in &seq[i + 1..] {
                gens.push(self.pow(&self.mul(u, v), p));
            }
        }
        for _ in 0..samples {
            let g = a.random_element(self, rng);
            gens.push(self.pow(&g, p));
        }
        gens.retain(|g| !g.is_identity());
        self.normal_closure(&gens)
    }

    /// Iterated p-power series I_0 = G, I_{i+1} = I_i^p (sampled), until trivial or `max` terms.
    pub fn iterated_power_series<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize, max: usize) -> Vec<FinSubgroup> {
        let mut out = alloc::vec![self.whole()];
        while out.len() <= max {
            let next = self.power_subgroup(out.last().unwrap(), rng, samples);
            let done = next.log_order(self) == 0;
            out.push(next);
            if done {
                break;
            }
        }
        out
    }

    /// p-power series 𝒫_i = G^{p^i}, i = 0..=max (sampled).
    pub fn power_series<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize, max: u32) -> Vec<FinSubgroup> {
        let whole = self.whole();
        let p = self.field.p() as i64;
        let mut out = alloc::vec![whole.clone()];
        for i in 1..=max {
            let e = p.pow(i);
            let seq = whole.sequence(self);
            let mut gens: Vec<FinElement> = seq.iter().map(|g| self.pow(g, e)).collect();
            for _ in 0..samples {
                gens.push(self.pow(&whole.random_element(self, rng), e));
            }
            gens.retain(|g| !g.is_identity());
            out.push(self.normal_closure(&gens));
        }
        out
    }
}

/// Induced generating sequence of a subgroup of G_k.
#[derive(Debug, Clone)]
pub struct FinSubgroup {
    // generator with x-exponent exactly p^v
    xgen: Option<(u32, FinElement)>,
    hrows: Vec<FinElement>,
    hpiv: BTreeMap<usize, usize>,
    zspan: EchelonSpan,
}

impl FinSubgroup {
    fn trivial(g: &FinGroup) -> Self {
        FinSubgroup { xgen: None, hrows: Vec::new(), hpiv: BTreeMap::new(), zspan: EchelonSpan::new(g.field) }
    }

    /// log_p of the order.
    pub fn log_order(&self, g: &FinGroup) -> usize {
        let x = self.xgen.as_ref().map_or(0, |(v, _)| g.k - v) as usize;
        x + self.hrows.len() + self.zspan.dim()
    }

    /// log_p |K ∩ Z_k|.
    pub fn z_rank(&self) -> usize {
        self.zspan.dim()
    }

    pub fn z_span(&self) -> &EchelonSpan {
        &self.zspan
    }

    pub fn sequence(&self, g: &FinGroup) -> Vec<FinElement> {
        let mut out = Vec::new();
        if let Some((_, x)) = &self.xgen {
            out.push(x.clone());
        }
        out.extend(self.hrows.iter().cloned());
        for r in self.zspan.rows() {
            out.push(g.from_z(r.to_dense(g.zdim)));
        }
        out
    }

    fn sift(&self, g: &FinGroup, a: &FinElement) -> FinElement {
        let f = g.field;
        let mut a = a.clone();
        if a.e != 0 {
            let Some((v, xg)) = &self.xgen else { return a };
            let pv = (f.p() as u32).pow(*v);
            if a.e % pv != 0 {
                return a;
            }
            let t = (a.e / pv) as i64;
            a = g.mul(&g.pow(xg, -t), &a);
            debug_assert_eq!(a.e, 0);
        }
        for (&lead, &r) in &self.hpiv {
            let c = a.b[lead];
            if c != 0 {
                a = g.mul(&g.pow(&self.hrows[r], -(c as i64)), &a);
            }
        }
        if a.b.iter().any(|&c| c != 0) {
            return a;
        }
        let zv = SparseVec::from_dense(f, &a.z);
        let res = self.zspan.reduce(&zv).expect("same field");
        g.from_z(res.to_dense(g.zdim))
    }

    pub fn contains(&self, g: &FinGroup, a: &FinElement) -> bool {
        self.sift(g, a).is_identity()
    }

    pub fn is_subgroup_of(&self, g: &FinGroup, other: &FinSubgroup) -> bool {
        self.sequence(g).iter().all(|s| other.contains(g, s))
    }

    pub fn equals(&self, g: &FinGroup, other: &FinSubgroup) -> bool {
        self.log_order(g) == other.log_order(g) && self.is_subgroup_of(g, other)
    }

    /// Add generators and close; `normalizers` are also conjugated by.
    pub fn extend(&mut self, g: &FinGroup, gens: &[FinElement], normalizers: &[FinElement]) {
        let f = g.field;
        let p = f.p() as i64;
        let mut queue: Vec<FinElement> = gens.to_vec();
        while let Some(a) = queue.pop() {
            let r = self.sift(g, &a);
            if r.is_identity() {
                continue;
            }
            let new = if r.e != 0 {
                let e = r.e as usize;
                let mut v = 0u32;
                let mut u = e;
                while u % f.p() as usize == 0 {
                    u /= f.p() as usize;
                    v += 1;
                }
                let ord = (g.q / (f.p() as usize).pow(v)) as i64;
                let uinv = mod_inverse(u as i64, ord);
                let xn = g.pow(&r, uinv);
                if let Some((_, old)) = self.xgen.take() {
                    queue.push(old);
                }
                self.xgen = Some((v, xn.clone()));
                queue.push(g.pow(&xn, ord));
                xn
            } else if r.b.iter().any(|&c| c != 0) {
                let lead = r.b.iter().position(|&c| c != 0).unwrap();
                let hn = g.pow(&r, f.inv(r.b[lead]) as i64);
                self.hpiv.insert(lead, self.hrows.len());
                self.hrows.push(hn.clone());
                queue.push(g.pow(&hn, p));
                hn
            } else {
                let zv = SparseVec::from_dense(f, &r.z);
                self.zspan.insert(&zv).expect("same field");
                r
            };
            for s in self.sequence(g) {
                let c = g.comm(&new, &s);
                if !c.is_identity() {
                    queue.push(c);
                }
            }
            for n in normalizers {
                let c = g.comm(&new, n);
                if !c.is_identity() {
                    queue.push(c);
                }
            }
        }
    }

    /// Uniform random element (via the normal form of the sequence).
    pub fn random_element<R: Rng + ?Sized>(&self, g: &FinGroup, rng: &mut R) -> FinElement {
        let p = g.field.p() as i64;
        let mut acc = g.identity();
        if let Some((v, xg)) = &self.xgen {
            let ord = (g.q / (p as usize).pow(*v)) as i64;
            acc = g.pow(xg, rng.random_range(0..ord));
        }
        for r in &self.hrows {
            acc = g.mul(&acc, &g.pow(r, rng.random_range(0..p)));
        }
        for r in self.zspan.rows() {
            let e = rng.random_range(0..p);
            acc = g.mul(&acc, &g.pow(&g.from_z(r.to_dense(g.zdim)), e));
        }
        acc
    }
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    if m == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let qt = old_r / r;
        (old_r, r) = (r, old_r - qt * r);
        (old_s, s) = (s, old_s - qt * s);
    }
    old_s.rem_euclid(m)
}

/// Homomorphism 𝔊/N_W → G_k, y ↦ y_k, x ↦ x_k.
#[derive(Debug, Clone)]
pub struct Embedding {
    c: Vec<FinElement>,
    zimg: Vec<FinElement>,
}

impl Embedding {
    pub fn new(fin: &FinGroup, ctx: &GWindowCtx) -> Result<Self, GfinError> {
        if fin.field != ctx.field() {
            return Err(GfinError::FieldMismatch);
        }
        let w = ctx.window();
        let c = fin.c_images(w + 1);
        if !c[w as usize + 1].is_identity() {
            return Err(GfinError::WindowTooSmall { w, next: w + 1 });
        }
        let zimg = ctx
            .layout()
            .indices()
            .iter()
            .map(|&idx| match idx {
                BasisIndex::Com(m, n) => fin.comm(&c[m as usize], &c[n as usize]),
                BasisIndex::CSq(l) => fin.pow(&c[l as usize], 2),
            })
            .collect();
        Ok(Embedding { c, zimg })
    }

    pub fn c_image(&self, i: u32) -> &FinElement {
        &self.c[i as usize]
    }

    pub fn apply(&self, fin: &FinGroup, g: &GElement) -> FinElement {
        let mut acc = fin.x_pow(g.xexp);
        for &(i, a) in g.h.entries() {
            acc = fin.mul(&acc, &fin.pow(&self.c[i as usize], a as i64));
        }
        for &(o, a) in g.z.entries() {
            acc = fin.mul(&acc, &fin.pow(&self.zimg[o as usize], a as i64));
        }
        acc
    }

    /// Image of a Z-vector of the window.
    pub fn apply_z(&self, fin: &FinGroup, z: &SparseVec) -> FinElement {
        let mut acc = fin.identity();
        for &(o, a) in z.entries() {
            acc = fin.mul(&acc, &fin.pow(&self.zimg[o as usize], a as i64));
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn group_axioms_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, k) in [(2, 2), (3, 1)] {
            let g = FinGroup::new(Fp::new(p).unwrap(), k).unwrap();
            let w = g.whole();
            for _ in 0..50 {
                let a = w.random_element(&g, &mut rng);
                let b = w.random_element(&g, &mut rng);
                let c = w.random_element(&g, &mut rng);
                assert!(g.mul(&a, &g.inv(&a)).is_identity());
                assert_eq!(g.mul(&g.mul(&a, &b), &c), g.mul(&a, &g.mul(&b, &c)));
            }
        }
    }

    #[test]
    fn x_has_order_q() {
        let g = FinGroup::new(Fp::new(2).unwrap(), 3).unwrap();
        assert!(g.pow(&g.x(), 8).is_identity());
        assert!(!g.pow(&g.x(), 4).is_identity());
        assert_eq!(g.conj(&g.b(7), &g.x()), g.b(0));
    }

    #[test]
    fn guard() {
        assert!(FinGroup::new(Fp::new(2).unwrap(), 7).is_err());
    }

    #[test]
    fn orders_class_and_series_lengths() {
        let f2 = Fp::new(2).unwrap();
        for (k, order, class) in [(1, 6, 3), (2, 16, 7)] {
            let g = FinGroup::new(f2, k).unwrap();
            assert_eq!(g.whole().log_order(&g), order);
            assert_eq!(g.lower_central_series().len() - 1, class);
        }
        let g = FinGroup::new(f2, 2).unwrap();
        assert_eq!(g.lower_p_series().len() - 1, 7);
        assert_eq!(g.dimension_series().len() - 1, 8);
        let g = FinGroup::new(Fp::new(3).unwrap(), 1).unwrap();
        assert_eq!(g.whole().log_order(&g), 1 + 3 + 3);
    }

    #[test]
    fn cyclic_and_generator_subgroups() {
        let g = FinGroup::new(Fp::new(2).unwrap(), 2).unwrap();
        assert_eq!(g.subgroup(&[g.x()]).log_order(&g), 2);
        assert_eq!(g.subgroup(&[g.y()]).log_order(&g), 2);
        let g3 = FinGroup::new(Fp::new(3).unwrap(), 1).unwrap();
        assert_eq!(g3.subgroup(&[g3.y()]).log_order(&g3), 1);
    }

    #[test]
    fn embedding_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (p, k) in [(2, 2), (3, 1)] {
            let fin = FinGroup::new(Fp::new(p).unwrap(), k).unwrap();
            let ctx = GWindowCtx::new(fin.field(), fin.min_embed_window()).unwrap();
            let emb = Embedding::new(&fin, &ctx).unwrap();
            for _ in 0..100 {
                let a = ctx.random(&mut rng, 7, ctx.window());
                let b = ctx.random(&mut rng, 7, ctx.window());
                assert_eq!(emb.apply(&fin, &ctx.mul(&a, &b)), fin.mul(&emb.apply(&fin, &a), &emb.apply(&fin, &b)));
            }
        }
        let fin = FinGroup::new(Fp::new(2).unwrap(), 2).unwrap();
        let ctx = GWindowCtx::new(fin.field(), 5).unwrap();
        assert!(Embedding::new(&fin, &ctx).is_err());
    }
}

