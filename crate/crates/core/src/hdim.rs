//! Normal forms of finitely generated subgroups, K ∩ Z, blocks and the
//! finite-level density sequences whose limits are the Hausdorff dimensions.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::filtser::{
    named_subgroup, policy_window, series_level, x_closure, Core, FiltError, Named, Projector, SeriesId,
    SeriesLevel,
};
use crate::fplin::{rank, Fp, SparseVec};
use crate::gsymb::{GElement, GWindowCtx, QElement, QuotCtx};
use crate::zbasis::BasisIndex;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HdimError {
    #[error(transparent)]
    Filt(#[from] FiltError),
    #[error("{mode} mode is not available for series {series} at p = {p}")]
    Unsupported { series: SeriesId, mode: Mode, p: u8 },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
}

/// What the normal form needs from an arithmetic: group operations plus
/// access to the image in B = H/Z.
pub trait GroupArith {
    type Elem: Clone + core::fmt::Debug;
    fn field(&self) -> Fp;
    fn window(&self) -> u32;
    fn identity(&self) -> Self::Elem;
    fn x_pow(&self, e: i64) -> Self::Elem;
    /// c_i; the identity beyond the window.
    fn gen_c(&self, i: u32) -> Self::Elem;
    /// z_{m,n} (m ≠ n); the identity where Z is not modelled.
    fn gen_z(&self, m: u32, n: u32) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
    fn pow(&self, a: &Self::Elem, e: i64) -> Self::Elem;
    fn comm(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn xexp(&self, a: &Self::Elem) -> i64;
    /// B-part, dense, index i − 1 for c_i.
    fn b_dense(&self, a: &Self::Elem) -> Vec<u8>;
    /// [h, g] for h ∈ H.
    fn bracket(&self, h: &Self::Elem, g: &Self::Elem) -> Self::Elem {
        self.comm(h, g)
    }
    fn b_lead(&self, a: &Self::Elem) -> Option<(u32, u8)> {
        let b = self.b_dense(a);
        b.iter().position(|&c| c != 0).map(|i| (i as u32 + 1, b[i]))
    }
}

impl GroupArith for GWindowCtx {
    type Elem = GElement;
    fn field(&self) -> Fp {
        GWindowCtx::field(self)
    }
    fn window(&self) -> u32 {
        GWindowCtx::window(self)
    }
    fn identity(&self) -> GElement {
        GWindowCtx::identity(self)
    }
    fn x_pow(&self, e: i64) -> GElement {
        GWindowCtx::x_pow(self, e)
    }
    fn gen_c(&self, i: u32) -> GElement {
        self.c(i).unwrap_or_else(|_| GWindowCtx::identity(self))
    }
    fn gen_z(&self, m: u32, n: u32) -> GElement {
        self.z(m, n).unwrap_or_else(|_| GWindowCtx::identity(self))
    }
    fn mul(&self, a: &GElement, b: &GElement) -> GElement {
        GWindowCtx::mul(self, a, b)
    }
    fn inv(&self, a: &GElement) -> GElement {
        GWindowCtx::inv(self, a)
    }
    fn pow(&self, a: &GElement, e: i64) -> GElement {
        GWindowCtx::pow(self, a, e)
    }
    fn comm(&self, a: &GElement, b: &GElement) -> GElement {
        GWindowCtx::comm(self, a, b)
    }
    fn xexp(&self, a: &GElement) -> i64 {
        a.xexp
    }
    fn b_dense(&self, a: &GElement) -> Vec<u8> {
        let mut b = alloc::vec![0u8; GWindowCtx::window(self) as usize];
        for &(i, c) in a.h.entries() {
            b[i as usize - 1] = c;
        }
        b
    }
    fn b_lead(&self, a: &GElement) -> Option<(u32, u8)> {
        a.h.leading()
    }
}

impl GroupArith for QuotCtx {
    type Elem = QElement;
    fn field(&self) -> Fp {
        QuotCtx::field(self)
    }
    fn window(&self) -> u32 {
        QuotCtx::window(self)
    }
    fn identity(&self) -> QElement {
        QuotCtx::identity(self)
    }
    fn x_pow(&self, e: i64) -> QElement {
        QuotCtx::x_pow(self, e)
    }
    fn gen_c(&self, i: u32) -> QElement {
        let mut q = QuotCtx::identity(self);
        if i >= 1 && i <= QuotCtx::window(self) {
            q.b[i as usize - 1] = 1;
        }
        q
    }
    fn gen_z(&self, _m: u32, _n: u32) -> QElement {
        QuotCtx::identity(self)
    }
    fn mul(&self, a: &QElement, b: &QElement) -> QElement {
        QuotCtx::mul(self, a, b)
    }
    fn inv(&self, a: &QElement) -> QElement {
        QuotCtx::inv(self, a)
    }
    fn pow(&self, a: &QElement, e: i64) -> QElement {
        QuotCtx::pow(self, a, e)
    }
    fn comm(&self, a: &QElement, b: &QElement) -> QElement {
        QuotCtx::comm(self, a, b)
    }
    fn xexp(&self, a: &QElement) -> i64 {
        a.xexp
    }
    fn b_dense(&self, a: &QElement) -> Vec<u8> {
        a.b.clone()
    }
    fn b_lead(&self, a: &QElement) -> Option<(u32, u8)> {
        a.lead()
    }
    // B([h, g]) = ((1+T)^e − 1)·B(h)
    fn bracket(&self, h: &QElement, g: &QElement) -> QElement {
        if h.xexp != 0 {
            return self.comm(h, g);
        }
        let f = QuotCtx::field(self);
        let mut b = self.act(&h.b, g.xexp);
        for (x, &y) in b.iter_mut().zip(&h.b) {
            *x = f.sub(*x, y);
        }
        QElement { xexp: 0, b }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NormalizeOpts {
    /// Cancellation steps per generator before it is dropped; `None` runs
    /// until the generator leaves the window.
    pub cancel_cap: Option<u32>,
}

/// K = ⟨x^{p^l·u} h, h_1, …, h_d⟩ with depths pairwise distinct mod p^l.
#[derive(Debug, Clone)]
pub struct FgSubgroup<E> {
    pub p: u8,
    pub window: u32,
    pub raw_gens: Vec<E>,
    /// K ≤ H: finite, dimension 0
    pub finite: bool,
    pub l: u32,
    /// x-exponent of the x-generator, p^l times a unit
    pub xexp: i64,
    pub xgen: Option<E>,
    /// H-generators sorted by depth
    pub hs: Vec<E>,
    pub depths: Vec<u32>,
    /// generators removed: absorbed into Z, or pushed out of the window
    pub dropped: Vec<E>,
    pub log: Vec<String>,
}

impl<E> FgSubgroup<E> {
    pub fn d(&self) -> usize {
        self.hs.len()
    }

    pub fn q(&self) -> u32 {
        (self.p as u32).pow(self.l)
    }

    /// d² / p^{2l}.
    pub fn predicted(&self) -> BigRational {
        if self.finite {
            return BigRational::zero();
        }
        let q = BigInt::from(self.q());
        let d = BigInt::from(self.d());
        BigRational::new(&d * &d, &q * &q)
    }
}

fn vp(mut e: i64, p: i64) -> u32 {
    let mut v = 0;
    while e % p == 0 {
        e /= p;
        v += 1;
    }
    v
}

/// Bring a generating set into the normal form used for K ∩ Z.
pub fn normalize<A: GroupArith>(arith: &A, gens: &[A::Elem], opts: NormalizeOpts) -> FgSubgroup<A::Elem> {
    let f = arith.field();
    let p = f.p() as i64;
    let w = arith.window();
    let mut out = FgSubgroup {
        p: f.p(),
        window: w,
        raw_gens: gens.to_vec(),
        finite: false,
        l: 0,
        xexp: 0,
        xgen: None,
        hs: Vec::new(),
        depths: Vec::new(),
        dropped: Vec::new(),
        log: Vec::new(),
    };
    let (mut xs, mut hs): (Vec<A::Elem>, Vec<A::Elem>) = gens.iter().cloned().partition(|g| arith.xexp(g) != 0);
    if xs.is_empty() {
        out.finite = true;
        out.log.push("all generators lie in H: K is finite".into());
        return out;
    }
    // Euclid on the x-exponents
    while xs.len() > 1 {
        xs.sort_by_key(|g| arith.xexp(g).unsigned_abs());
        let a = xs[0].clone();
        let ea = arith.xexp(&a);
        let mut keep = alloc::vec![a.clone()];
        for b in xs.drain(1..) {
            let q = arith.xexp(&b).div_euclid(ea);
            let r = arith.mul(&b, &arith.pow(&a, -q));
            if arith.xexp(&r) == 0 {
                hs.push(r);
            } else {
                keep.push(r);
            }
        }
        xs = keep;
    }
    let mut g = xs.pop().expect("one x-generator");
    if arith.xexp(&g) < 0 {
        g = arith.inv(&g);
    }
    let e = arith.xexp(&g);
    out.l = vp(e, p);
    out.xexp = e;
    let q = p.pow(out.l) as u32;
    if e != p.pow(out.l) {
        out.log.push(format!("x-generator has exponent {e} = p^{} times a unit", out.l));
    }
    let cap = opts.cancel_cap.unwrap_or(w + 1);
    // residue mod q → (depth, generator)
    let mut slots: Vec<Option<(u32, A::Elem)>> = alloc::vec![None; q as usize];
    for h in hs {
        let mut cur = h;
        let mut steps = 0u32;
        loop {
            let Some((j, c)) = arith.b_lead(&cur) else {
                out.log.push(format!("generator absorbed into Z after {steps} cancellation steps"));
                out.dropped.push(cur);
                break;
            };
            if steps >= cap {
                out.log.push(format!("cancellation stopped at depth {j} after {steps} steps; generator dropped"));
                out.dropped.push(cur);
                break;
            }
            let r = ((j - 1) % q) as usize;
            match slots[r].take() {
                None => {
                    slots[r] = Some((j, cur));
                    break;
                }
                Some((i, hn)) if i <= j => {
                    let mut t = hn.clone();
                    for _ in 0..(j - i) / q {
                        t = arith.bracket(&t, &g);
                    }
                    let (tj, tc) = arith.b_lead(&t).expect("chain keeps its depth");
                    debug_assert_eq!(tj, j);
                    let s = f.mul(c, f.inv(tc)) as i64;
                    cur = arith.mul(&cur, &arith.pow(&t, -s));
                    slots[r] = Some((i, hn));
                }
                Some((i, hn)) => {
                    slots[r] = Some((j, cur));
                    cur = hn;
                    let _ = i;
                }
            }
            steps += 1;
        }
    }
    let mut filled: Vec<(u32, A::Elem)> = slots.into_iter().flatten().collect();
    filled.sort_by_key(|(j, _)| *j);
    for (j, h) in filled {
        out.depths.push(j);
        out.hs.push(h);
    }
    out.xgen = Some(g);
    out
}

/// The starred generators c*_j (j ∈ I) as B-parts, reduced so that each has
/// zero coefficient at every other index of I.
#[derive(Debug, Clone)]
pub struct StarBasis {
    pub p: u8,
    pub window: u32,
    pub q: u32,
    /// I ∩ [1, W], increasing
    pub index_set: Vec<u32>,
    /// rows[t] is the B-part of c*_{index_set[t]} (dense, index i − 1 for c_i)
    pub rows: Vec<Vec<u8>>,
    in_i: Vec<bool>,
}

impl StarBasis {
    pub fn new<A: GroupArith>(arith: &A, k: &FgSubgroup<A::Elem>) -> Self {
        let f = arith.field();
        let w = arith.window();
        let q = k.q();
        let mut raw: Vec<(u32, Vec<u8>)> = Vec::new();
        if let Some(g) = &k.xgen {
            for (h, &i) in k.hs.iter().zip(&k.depths) {
                let mut cur = h.clone();
                let mut j = i;
                while j <= w {
                    raw.push((j, arith.b_dense(&cur)));
                    cur = arith.bracket(&cur, g);
                    j += q;
                }
            }
        }
        raw.sort_by_key(|(j, _)| *j);
        let index_set: Vec<u32> = raw.iter().map(|(j, _)| *j).collect();
        let mut in_i = alloc::vec![false; w as usize + 1];
        for &j in &index_set {
            in_i[j as usize] = true;
        }
        // normalise leads to 1, then clear the other pivot columns from the top down
        let mut rows: Vec<Vec<u8>> = raw
            .into_iter()
            .map(|(j, mut v)| {
                let s = f.inv(v[j as usize - 1]);
                for c in v.iter_mut() {
                    *c = f.mul(*c, s);
                }
                v
            })
            .collect();
        let pos: alloc::collections::BTreeMap<u32, usize> =
            index_set.iter().enumerate().map(|(t, &j)| (j, t)).collect();
        for t in (0..rows.len()).rev() {
            let j = index_set[t];
            for col in j + 1..=w {
                let c = rows[t][col as usize - 1];
                if c == 0 || !in_i[col as usize] {
                    continue;
                }
                let u = pos[&col];
                let (lo, hi) = rows.split_at_mut(u);
                let src = &hi[0];
                let dst = &mut lo[t];
                for (x, &y) in dst.iter_mut().zip(src) {
                    if y != 0 {
                        *x = f.sub(*x, f.mul(c, y));
                    }
                }
            }
        }
        StarBasis { p: f.p(), window: w, q, index_set, rows, in_i }
    }

    pub fn field(&self) -> Fp {
        Fp::new(self.p as u32).expect("prime")
    }

    pub fn contains(&self, j: u32) -> bool {
        (j as usize) < self.in_i.len() && self.in_i[j as usize]
    }

    /// B-part of c*_j truncated to window `w`, keyed by c-index.
    pub fn star_b(&self, j: u32, w: u32) -> SparseVec {
        let f = self.field();
        match self.index_set.binary_search(&j) {
            Ok(t) => SparseVec::from_coeffs(
                f,
                self.rows[t].iter().take(w as usize).enumerate().map(|(i, &c)| (i as u32 + 1, c)),
            ),
            Err(_) => SparseVec::unit(f, j),
        }
    }

    /// Whether every c*_j coincides with c_j (then star and ordinary
    /// coordinates agree).
    pub fn is_trivial_change(&self) -> bool {
        self.rows
            .iter()
            .zip(&self.index_set)
            .all(|(r, &j)| r.iter().enumerate().all(|(i, &c)| c == 0 || i as u32 + 1 == j))
    }

    /// Star basis vector at window ordinal `o`, in ordinary coordinates.
    pub fn star_vec(&self, ctx: &GWindowCtx, o: u32) -> SparseVec {
        let w = ctx.window();
        match ctx.layout().index(o) {
            BasisIndex::CSq(l) => ctx.square_map(&self.star_b(l, w)),
            BasisIndex::Com(m, n) => ctx.beta(&self.star_b(m, w), &self.star_b(n, w)),
        }
    }

    /// Coordinates of `v` in the star basis (unitriangular solve).
    pub fn to_star(&self, ctx: &GWindowCtx, v: &SparseVec) -> SparseVec {
        if self.is_trivial_change() {
            return v.clone();
        }
        let mut rest = v.clone();
        let mut out = Vec::new();
        while let Some((o, c)) = rest.leading() {
            let s = self.star_vec(ctx, o);
            debug_assert_eq!(s.leading(), Some((o, 1)));
            rest = rest.axpy(ctx.field().neg(c), &s).expect("same field");
            out.push((o, c));
        }
        SparseVec::from_coeffs(ctx.field(), out)
    }
}

/// K ∩ Z = ⟨(c*_i)², z*_{j,k} : i, j, k ∈ I⟩ in the window of `ctx`.
pub fn k_cap_z(ctx: &GWindowCtx, star: &StarBasis) -> Vec<SparseVec> {
    let w = ctx.window();
    let idx: Vec<u32> = star.index_set.iter().copied().filter(|&j| j <= w).collect();
    let bs: Vec<SparseVec> = idx.iter().map(|&j| star.star_b(j, w)).collect();
    let mut out = Vec::new();
    for a in 0..bs.len() {
        if ctx.p() == 2 {
            out.push(ctx.square_map(&bs[a]));
        }
        for b in 0..a {
            out.push(ctx.beta(&bs[a], &bs[b]));
        }
    }
    out.retain(|v| !v.is_zero());
    out
}

/// Ordinals of the star coordinates of K ∩ Z inside the window.
fn k_star_units(ctx: &GWindowCtx, star: &StarBasis) -> Vec<SparseVec> {
    let f = ctx.field();
    ctx.layout()
        .indices()
        .iter()
        .enumerate()
        .filter(|(_, &i)| {
            let (m, n) = i.pair();
            star.contains(m) && star.contains(n)
        })
        .map(|(o, _)| SparseVec::unit(f, o as u32))
        .collect()
}

/// The block B_{r,s}: star generators z*_{i+rq, j+sq}, 1 ≤ i, j ≤ q, i+rq > j+sq.
pub fn blocks(ctx: &GWindowCtx, star: &StarBasis, r: u32, s: u32) -> Vec<SparseVec> {
    let q = star.q;
    let mut out = Vec::new();
    for i in 1..=q {
        for j in 1..=q {
            let (a, b) = (i + r * q, j + s * q);
            if a > b {
                if let Some(o) = ctx.layout().ordinal_pair(a, b) {
                    out.push(star.star_vec(ctx, o));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Raw,
    Delta,
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Mode::Raw => "raw",
            Mode::Delta => "delta",
        })
    }
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "raw" => Some(Mode::Raw),
            "delta" => Some(Mode::Delta),
            _ => None,
        }
    }
}

/// A Z-generator given in basis terms (coefficient per basis element).
pub type ZWord = Vec<(BasisIndex, i64)>;

#[derive(Debug, Clone)]
pub struct DensityOpts {
    pub budget: u32,
    /// added as normal closures ⟨z⟩^𝔊
    pub extra_z: Vec<ZWord>,
    /// sandwich bounds for odd-p P are computed up to this window
    pub sandwich_window: u32,
}

impl Default for DensityOpts {
    fn default() -> Self {
        DensityOpts { budget: crate::filtser::DEFAULT_WINDOW_BUDGET, extra_z: Vec::new(), sandwich_window: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityPoint {
    pub k: u32,
    pub window: u32,
    /// log_p |K_Z(S_k ∩ Z) : S_k ∩ Z|
    pub numerator: usize,
    /// log_p |Z : S_k ∩ Z|
    pub denominator: usize,
    pub ratio: BigRational,
    /// odd-p P only: ratios against the two sandwich bounds
    pub sandwich: Option<(BigRational, BigRational)>,
}

#[derive(Debug, Clone)]
pub struct DensityReport {
    pub series: SeriesId,
    pub p: u8,
    pub mode: Mode,
    pub l: u32,
    pub d: usize,
    pub points: Vec<DensityPoint>,
    pub tail_estimate: BigRational,
    pub tail_min: BigRational,
    pub tail_max: BigRational,
    pub predicted: BigRational,
    pub abs_gap: BigRational,
    pub notes: Vec<String>,
}

impl DensityReport {
    /// |ratio − predicted| per point.
    pub fn gaps(&self) -> Vec<BigRational> {
        self.points.iter().map(|pt| (&pt.ratio - &self.predicted).abs()).collect()
    }

    /// Gaps of the last `n` points are non-increasing.
    pub fn gap_monotone_last(&self, n: usize) -> bool {
        let g = self.gaps();
        let t = &g[g.len().saturating_sub(n)..];
        t.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

fn ratio(num: usize, den: usize) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn zword_vec(ctx: &GWindowCtx, z: &ZWord) -> SparseVec {
    let f = ctx.field();
    SparseVec::from_terms(f, z.iter().filter_map(|&(i, c)| ctx.layout().ordinal(i).map(|o| (o, c))))
}

fn extra_closure(ctx: &GWindowCtx, zs: &[ZWord]) -> Vec<SparseVec> {
    if zs.is_empty() {
        return Vec::new();
    }
    let gens: Vec<SparseVec> = zs.iter().map(|z| zword_vec(ctx, z)).collect();
    x_closure(ctx, &gens).rows().to_vec()
}

// numerator and denominator of the density of span(k) against span(core ∪ extras)
fn dens(field: Fp, pr: &Projector, extras: &[SparseVec], k: &[SparseVec]) -> (usize, usize) {
    let e = pr.project_all(extras);
    let re = rank(field, &e).expect("same field");
    let mut all = e;
    all.extend(pr.project_all(k));
    let ru = rank(field, &all).expect("same field");
    (ru - re, pr.ncols() - re)
}

// The chains z, [z, x], [z, x, x], … with the core coordinates dropped at
// every step. The core is x-stable, so this spans the closure modulo the core
// without ever building the (much larger) full closure.
fn extra_chains_mod(ctx: &GWindowCtx, pr: &Projector, zs: &[ZWord]) -> Vec<SparseVec> {
    let mut out = Vec::new();
    for z in zs {
        let mut v = zword_vec(ctx, z).filter(|o| !pr.kills(o));
        while !v.is_zero() {
            let next = ctx.z_comm_x(&v).filter(|o| !pr.kills(o));
            out.push(v);
            v = next;
        }
    }
    out
}

fn raw_point(level: &SeriesLevel, star: &StarBasis, opts: &DensityOpts) -> (usize, usize) {
    let ctx = &level.ctx;
    let pr = level.projector();
    let mut kz = k_cap_z(ctx, star);
    kz.extend(extra_chains_mod(ctx, &pr, &opts.extra_z));
    dens(ctx.field(), &pr, &level.extras, &kz)
}

// odd-p P: ⟨z_{m,n} : m ≥ p^k⟩ ≤ 𝔊^{p^k} ∩ Z ≤ L_k
fn sandwich_point(level: &SeriesLevel, star: &StarBasis, opts: &DensityOpts) -> Option<(BigRational, BigRational)> {
    let ctx = &level.ctx;
    let p = level.p as u32;
    let lower = Core { m_from: Some(p.pow(level.k)), ..Core::none() };
    let ctx_w = ctx.window();
    if ctx_w > opts.sandwich_window || lower.exact_window(level.p)? > ctx_w {
        return None;
    }
    let mut kz = k_cap_z(ctx, star);
    kz.extend(extra_closure(ctx, &opts.extra_z));
    let f = ctx.field();
    let prl = Projector::new(ctx.layout(), |i| lower.contains(i));
    let (n1, d1) = dens(f, &prl, &[], &kz);
    let up = named_subgroup(ctx, Named::L, level.k).ok()?;
    let all = Projector::new(ctx.layout(), |_| false);
    let (n2, d2) = dens(f, &all, &up, &kz);
    if d1 == 0 || d2 == 0 {
        return None;
    }
    Some((ratio(n1, d1), ratio(n2, d2)))
}

fn delta_point(level: &SeriesLevel, star: &StarBasis, opts: &DensityOpts) -> Result<(usize, usize), HdimError> {
    let ctx = &level.ctx;
    let f = ctx.field();
    let w = ctx.window();
    let q = star.q;
    let k = level.k;
    // for F the blocks are tested against Θ_k, the Com part of the core
    let com = Core { sq_from: None, ..level.core };
    let nb = w.div_ceil(q) as usize + 1;
    let mut meets = alloc::vec![false; nb * nb];
    for a in 1..=nb as u32 * q {
        for b in 1..a {
            let (r, s) = (((a - 1) / q) as usize, ((b - 1) / q) as usize);
            if a > w || com.contains(BasisIndex::Com(a, b)) {
                meets[r * nb + s] = true;
            }
        }
    }
    let m_k = level.markers.m_k;
    let in_delta = |i: BasisIndex| match i {
        BasisIndex::CSq(j) => m_k.is_some_and(|m| j >= m),
        BasisIndex::Com(a, b) => meets[((a - 1) / q) as usize * nb + ((b - 1) / q) as usize],
    };
    let pr = Projector::new(ctx.layout(), in_delta);
    let extras = if level.series == SeriesId::F && level.p == 2 && k > 0 {
        let mut e = named_subgroup(ctx, Named::Psi, k)?;
        e.extend(named_subgroup(ctx, Named::Lambda, k)?);
        e.iter().map(|v| star.to_star(ctx, v)).collect()
    } else {
        Vec::new()
    };
    let mut ks = k_star_units(ctx, star);
    if ctx.p() == 2 {
        ks.extend(star.index_set.iter().filter_map(|&j| ctx.layout().unit(BasisIndex::CSq(j))));
    }
    ks.extend(extra_closure(ctx, &opts.extra_z).iter().map(|v| star.to_star(ctx, v)));
    Ok(dens(f, &pr, &extras, &ks))
}

/// Raw mode: K_Z against S_k ∩ Z in ordinary coordinates. Delta mode:
/// K_Z against the block coarsening Δ_k in star coordinates.
pub fn density_sequence(
    k: &FgSubgroup<QElement>,
    series: SeriesId,
    horizon: u32,
    mode: Mode,
    opts: &DensityOpts,
) -> Result<DensityReport, HdimError> {
    if horizon == 0 {
        return Err(HdimError::EmptyHorizon);
    }
    let p = k.p;
    let mut notes = k.log.clone();
    let mut rep = DensityReport {
        series,
        p,
        mode,
        l: k.l,
        d: k.d(),
        points: Vec::new(),
        tail_estimate: BigRational::zero(),
        tail_min: BigRational::zero(),
        tail_max: BigRational::zero(),
        predicted: k.predicted(),
        abs_gap: BigRational::zero(),
        notes: Vec::new(),
    };
    if mode == Mode::Delta {
        let ok = match (series, p) {
            (SeriesId::L | SeriesId::D | SeriesId::M, _) => true,
            (SeriesId::F | SeriesId::I, 2) => true,
            _ => false,
        };
        if !ok {
            return Err(HdimError::Unsupported { series, mode, p });
        }
    }
    if k.finite {
        notes.push("K ≤ H is finite; its dimension is 0".into());
        rep.notes = notes;
        return Ok(rep);
    }
    let need = policy_window(series, horizon, p as u32);
    if need > opts.budget {
        return Err(FiltError::Budget { needed: need, budget: opts.budget }.into());
    }
    if k.window < need {
        return Err(FiltError::WindowTooSmall { window: k.window, needed: need }.into());
    }
    let qc = QuotCtx::new(Fp::new(p as u32).expect("prime"), k.window);
    let star = StarBasis::new(&qc, k);
    let mut first_notes = true;
    for lvl in 1..=horizon {
        let level = series_level(series, lvl, p as u32, None, opts.budget)?;
        if first_notes {
            notes.extend(level.notes.iter().cloned());
            first_notes = false;
        }
        let (num, den) = match mode {
            Mode::Raw => raw_point(&level, &star, opts),
            Mode::Delta => delta_point(&level, &star, opts)?,
        };
        if den == 0 {
            notes.push(format!("level {lvl}: S_k ∩ Z = Z, no density"));
            continue;
        }
        let sandwich = if series == SeriesId::P && p != 2 && mode == Mode::Raw {
            sandwich_point(&level, &star, opts)
        } else {
            None
        };
        rep.points.push(DensityPoint { k: lvl, window: level.window, numerator: num, denominator: den, ratio: ratio(num, den), sandwich });
    }
    let n = rep.points.len();
    if n > 0 {
        let t = &rep.points[n - n.div_ceil(4)..];
        let sum = t.iter().fold(BigRational::zero(), |a, pt| a + &pt.ratio);
        rep.tail_estimate = sum / BigRational::from_integer(BigInt::from(t.len()));
        rep.tail_min = t.iter().map(|pt| pt.ratio.clone()).min().expect("nonempty");
        rep.tail_max = t.iter().map(|pt| pt.ratio.clone()).max().expect("nonempty");
    }
    rep.abs_gap = (&rep.tail_estimate - &rep.predicted).abs();
    rep.notes = notes;
    Ok(rep)
}

/// The window `density_sequence` needs for a horizon.
pub fn required_window(series: SeriesId, horizon: u32, p: u32) -> u32 {
    policy_window(series, horizon, p)
}

/// K = ⟨x^{p^l}, c_1, …, c_d⟩ normalised in the window `w`.
pub fn witness(p: u32, l: u32, d: u32, w: u32) -> FgSubgroup<QElement> {
    let qc = QuotCtx::new(Fp::new(p).expect("prime"), w);
    let mut gens = alloc::vec![qc.x_pow((p as i64).pow(l))];
    for i in 1..=d {
        gens.push(GroupArith::gen_c(&qc, i));
    }
    normalize(&qc, &gens, NormalizeOpts::default())
}

#[derive(Debug, Clone)]
pub struct SpectrumEntry {
    pub l: u32,
    pub d: u32,
    pub predicted: BigRational,
    pub tail: BigRational,
    /// the value d'²/p^{2l} nearest to the tail, if within tolerance
    pub identified: Option<BigRational>,
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub p: u32,
    pub l_max: u32,
    pub series: SeriesId,
    pub horizon: u32,
    pub mode: Mode,
    pub tolerance: f64,
    pub entries: Vec<SpectrumEntry>,
    pub achieved: BTreeSet<BigRational>,
}

/// Run every witness ⟨x^{p^l}, c_1, …, c_d⟩, l ≤ l_max, d ≤ p^l.
pub fn spectrum_scan(
    p: u32,
    l_max: u32,
    series: SeriesId,
    horizon: u32,
    mode: Mode,
    tolerance: f64,
    opts: &DensityOpts,
) -> Result<SpectrumReport, HdimError> {
    let w = required_window(series, horizon, p);
    let mut entries = Vec::new();
    let mut achieved = BTreeSet::new();
    for l in 0..=l_max {
        let q = p.pow(l);
        for d in 0..=q {
            let k = witness(p, l, d, w);
            let rep = density_sequence(&k, series, horizon, mode, opts)?;
            let tail = rep.tail_estimate.clone();
            let t = to_f64(&tail);
            let best = (0..=q)
                .map(|e| BigRational::new(BigInt::from(e * e), BigInt::from(q * q)))
                .min_by(|a, b| (to_f64(a) - t).abs().total_cmp(&(to_f64(b) - t).abs()))
                .expect("nonempty");
            let identified = ((to_f64(&best) - t).abs() <= tolerance).then_some(best);
            if let Some(v) = &identified {
                achieved.insert(v.clone());
            }
            entries.push(SpectrumEntry { l, d, predicted: k.predicted(), tail, identified });
        }
    }
    Ok(SpectrumReport { p, l_max, series, horizon, mode, tolerance, entries, achieved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fplin::EchelonSpan;

    fn fp(p: u32) -> Fp {
        Fp::new(p).unwrap()
    }

    #[test]
    fn normal_form_examples() {
        let g = GWindowCtx::new(fp(2), 12).unwrap();
        let k = normalize(&g, &[g.x(), g.y()], NormalizeOpts::default());
        assert_eq!((k.l, k.d(), k.depths.clone()), (0, 1, alloc::vec![1]));
        let k = normalize(&g, &[g.x_pow(4), g.mul(&g.x_pow(2), &g.y())], NormalizeOpts::default());
        assert_eq!(k.l, 1);
        // (x²y)^{-2}x⁴ has B-part c_3
        assert_eq!(k.depths, alloc::vec![3]);
        let k = normalize(&g, &[g.y(), g.c(2).unwrap()], NormalizeOpts::default());
        assert!(k.finite);
        assert_eq!(k.predicted(), BigRational::zero());
    }

    #[test]
    fn depths_distinct_mod_q() {
        let g = GWindowCtx::new(fp(2), 20).unwrap();
        let gens = [g.x_pow(4), g.y(), g.c(5).unwrap(), g.c(2).unwrap(), g.mul(&g.c(3).unwrap(), &g.c(4).unwrap())];
        let k = normalize(&g, &gens, NormalizeOpts::default());
        assert_eq!(k.l, 2);
        let res: BTreeSet<u32> = k.depths.iter().map(|j| (j - 1) % 4).collect();
        assert_eq!(res.len(), k.d());
        assert_eq!(k.d(), 3);
        // c_5 ≡ [y, x^4] is absorbed
        assert!(!k.dropped.is_empty());
    }

    #[test]
    fn quotient_and_window_normal_forms_agree() {
        let g = GWindowCtx::new(fp(3), 15).unwrap();
        let qc = QuotCtx::new(fp(3), 15);
        let gens = [g.mul(&g.x_pow(6), &g.c(2).unwrap()), g.x_pow(9), g.mul(&g.y(), &g.c(4).unwrap()), g.c(7).unwrap()];
        let qgens: Vec<QElement> = gens.iter().map(|h| qc.from_g(h)).collect();
        let a = normalize(&g, &gens, NormalizeOpts::default());
        let b = normalize(&qc, &qgens, NormalizeOpts::default());
        assert_eq!((a.l, a.xexp, a.depths.clone()), (b.l, b.xexp, b.depths.clone()));
        let sa = StarBasis::new(&g, &a);
        let sb = StarBasis::new(&qc, &b);
        assert_eq!(sa.index_set, sb.index_set);
        assert_eq!(sa.rows, sb.rows);
    }

    #[test]
    fn k_cap_z_examples() {
        let g = GWindowCtx::new(fp(2), 12).unwrap();
        let k = normalize(&g, &[g.x()], NormalizeOpts::default());
        assert!(k_cap_z(&g, &StarBasis::new(&g, &k)).is_empty());
        let k = normalize(&g, &[g.x(), g.y()], NormalizeOpts::default());
        let kz = k_cap_z(&g, &StarBasis::new(&g, &k));
        assert_eq!(rank(g.field(), &kz).unwrap(), g.layout().dim());
        let k = normalize(&g, &[g.x_pow(2), g.y()], NormalizeOpts::default());
        let kz = k_cap_z(&g, &StarBasis::new(&g, &k));
        let span = EchelonSpan::from_vectors(g.field(), &kz).unwrap();
        let leads: BTreeSet<BasisIndex> = span.pivots().map(|o| g.layout().index(o)).collect();
        for i in g.layout().indices() {
            let (m, n) = i.pair();
            assert_eq!(leads.contains(i), m % 2 == 1 && n % 2 == 1, "{i:?}");
        }
    }

    #[test]
    fn k_cap_z_matches_finite_quotient() {
        use crate::gfin::{Embedding, FinGroup};
        // K ∩ Z computed from K_Z equals the Z-part of the generated subgroup, up to the
        // part coming from generators beyond the window
        let fin = FinGroup::new(fp(2), 3).unwrap();
        let w = fin.min_embed_window();
        let g = GWindowCtx::new(fp(2), w).unwrap();
        let emb = Embedding::new(&fin, &g).unwrap();
        let gens = [g.x_pow(2), g.mul(&g.y(), &g.c(2).unwrap())];
        let k = normalize(&g, &gens, NormalizeOpts::default());
        let kz = k_cap_z(&g, &StarBasis::new(&g, &k));
        let sub = fin.subgroup(&gens.iter().map(|h| emb.apply(&fin, h)).collect::<Vec<_>>());
        for v in &kz {
            assert!(sub.contains(&fin, &emb.apply_z(&fin, v)));
        }
    }

    #[test]
    fn normalized_generators_generate_with_dropped() {
        use crate::gfin::{Embedding, FinGroup};
        let fin = FinGroup::new(fp(2), 3).unwrap();
        let w = fin.min_embed_window();
        let g = GWindowCtx::new(fp(2), w).unwrap();
        let emb = Embedding::new(&fin, &g).unwrap();
        let gens = [g.x_pow(4), g.mul(&g.x_pow(2), &g.y())];
        let k = normalize(&g, &gens, NormalizeOpts::default());
        assert_eq!(k.l, 1);
        let img = |v: &[GElement]| fin.subgroup(&v.iter().map(|h| emb.apply(&fin, h)).collect::<Vec<_>>());
        let raw = img(&gens);
        let mut all = alloc::vec![k.xgen.clone().unwrap()];
        all.extend(k.hs.iter().cloned());
        all.extend(k.dropped.iter().cloned());
        assert!(img(&all).equals(&fin, &raw));
        let mut norm = alloc::vec![k.xgen.clone().unwrap()];
        norm.extend(k.hs.iter().cloned());
        assert!(img(&norm).is_subgroup_of(&fin, &raw));
    }

    #[test]
    fn block_counts() {
        for (p, l, d) in [(2u32, 1u32, 1u32), (2, 1, 2), (2, 2, 3), (3, 1, 2)] {
            let q = p.pow(l);
            let w = 6 * q;
            let g = GWindowCtx::new(fp(p), w).unwrap();
            let k = witness(p, l, d, w);
            let star = StarBasis::new(&QuotCtx::new(fp(p), w), &k);
            let kz = k_cap_z(&g, &star);
            let f = g.field();
            for r in 1..4 {
                for s in 0..=r {
                    let b = blocks(&g, &star, r, s);
                    let db = rank(f, &b).unwrap();
                    let dk = rank(f, &kz).unwrap();
                    let mut both = b.clone();
                    both.extend(kz.iter().cloned());
                    let cap = db + dk - rank(f, &both).unwrap();
                    if s < r {
                        assert_eq!((db, cap), ((q * q) as usize, (d * d) as usize), "p={p} l={l} d={d} r={r} s={s}");
                    } else {
                        assert!(db < (q * q) as usize);
                        assert!(cap <= (d * d) as usize);
                    }
                }
            }
        }
    }

    #[test]
    fn whole_group_has_ratio_one() {
        for s in SeriesId::ALL {
            let w = required_window(s, 3, 2);
            let k = witness(2, 0, 1, w);
            let rep = density_sequence(&k, s, 3, Mode::Raw, &DensityOpts::default()).unwrap();
            assert!(rep.points.iter().all(|pt| pt.ratio == BigRational::from_integer(1.into())), "{s}");
        }
    }

    #[test]
    fn raw_and_delta_agree_on_witness_levels() {
        for (s, h) in [(SeriesId::L, 12), (SeriesId::D, 12), (SeriesId::M, 4), (SeriesId::F, 4)] {
            let w = required_window(s, h, 2);
            let k = witness(2, 1, 1, w);
            let a = density_sequence(&k, s, h, Mode::Raw, &DensityOpts::default()).unwrap();
            let b = density_sequence(&k, s, h, Mode::Delta, &DensityOpts::default()).unwrap();
            assert_eq!(a.points.len(), b.points.len());
            if s == SeriesId::M {
                // blocks are aligned with M_k ∩ Z
                assert_eq!(a.points, b.points);
            }
        }
    }

    #[test]
    fn chains_mod_core_match_full_closure() {
        let zs: Vec<ZWord> = vec![vec![(BasisIndex::Com(3, 1), 1)], vec![(BasisIndex::Com(5, 2), 1), (BasisIndex::CSq(2), 1)]];
        for (s, k) in [(SeriesId::L, 5), (SeriesId::M, 2), (SeriesId::D, 6)] {
            let level = series_level(s, k, 2, None, 5000).unwrap();
            let ctx = &level.ctx;
            let pr = level.projector();
            let full = extra_closure(ctx, &zs);
            let chains = extra_chains_mod(ctx, &pr, &zs);
            let f = ctx.field();
            let mut a = pr.project_all(&level.extras);
            let mut b = a.clone();
            a.extend(pr.project_all(&full));
            b.extend(pr.project_all(&chains));
            assert_eq!(rank(f, &a).unwrap(), rank(f, &b).unwrap(), "{s} level {k}");
        }
    }

    #[test]
    fn star_solve_inverts_star_vectors() {
        let w = 10;
        let g = GWindowCtx::new(fp(2), w).unwrap();
        let gens = [g.mul(&g.x_pow(2), &g.c(3).unwrap()), g.mul(&g.y(), &g.c(2).unwrap())];
        let k = normalize(&g, &gens, NormalizeOpts::default());
        let star = StarBasis::new(&g, &k);
        assert!(!star.is_trivial_change());
        for o in 0..g.layout().dim() as u32 {
            let v = star.star_vec(&g, o);
            assert_eq!(star.to_star(&g, &v), SparseVec::unit(g.field(), o));
        }
    }
}
