//! Filtration terms intersected with Z, for the six series L, D, M, P, I, F.
//!
//! Every level is described by a *core*, a coordinate subspace of Z given by
//! index predicates, plus a short list of extra generator vectors. The window
//! is chosen so that every basis element with an index above W lies in the
//! core; index computations in the window are then exact.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::fplin::{rank, EchelonSpan, Fp, FpError, SparseVec};
use crate::gfin::{Embedding, FinGroup, FinSubgroup, GfinError};
use crate::gsymb::{GWindowCtx, GsymbError};
use crate::zbasis::{BasisIndex, ZLayout};

pub const DEFAULT_WINDOW_BUDGET: u32 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SeriesId {
    /// lower p-series
    L,
    /// dimension subgroups (Jennings), shifted so that D_0 = G
    D,
    /// natural filtration, kernels of 𝔊 → G_k
    M,
    /// p-power series
    P,
    /// iterated p-power series
    I,
    /// Frattini series
    F,
}

impl SeriesId {
    pub const ALL: [SeriesId; 6] = [SeriesId::L, SeriesId::D, SeriesId::M, SeriesId::P, SeriesId::I, SeriesId::F];

    pub fn name(self) -> &'static str {
        match self {
            SeriesId::L => "L",
            SeriesId::D => "D",
            SeriesId::M => "M",
            SeriesId::P => "P",
            SeriesId::I => "I",
            SeriesId::F => "F",
        }
    }

    pub fn parse(s: &str) -> Option<SeriesId> {
        SeriesId::ALL.into_iter().find(|x| x.name().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for SeriesId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FiltError {
    #[error("level needs window {needed}, above the budget {budget}")]
    Budget { needed: u32, budget: u32 },
    #[error("window {window} is not exact for this level (needs at least {needed})")]
    WindowTooSmall { window: u32, needed: u32 },
    #[error("{name} is not defined for p = {p}")]
    Parity { name: &'static str, p: u8 },
    #[error(transparent)]
    Field(#[from] FpError),
    #[error(transparent)]
    Gsymb(#[from] GsymbError),
}

/// Coordinate subspace of Z: `Com(m,n)` lies in it iff m + n ≥ w, m ≥ a or
/// n ≥ b; `CSq(l)` iff l ≥ s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Core {
    pub sq_from: Option<u32>,
    pub weight_from: Option<u32>,
    pub m_from: Option<u32>,
    pub n_from: Option<u32>,
}

impl Core {
    pub fn all() -> Self {
        Core { sq_from: Some(1), weight_from: Some(0), m_from: None, n_from: None }
    }

    pub fn none() -> Self {
        Core::default()
    }

    #[inline]
    pub fn contains(&self, idx: BasisIndex) -> bool {
        match idx {
            BasisIndex::CSq(l) => self.sq_from.is_some_and(|s| l >= s),
            BasisIndex::Com(m, n) => {
                self.weight_from.is_some_and(|w| m + n >= w)
                    || self.m_from.is_some_and(|a| m >= a)
                    || self.n_from.is_some_and(|b| n >= b)
            }
        }
    }

    /// Smallest window W with every basis element outside it in the core.
    pub fn exact_window(&self, p: u8) -> Option<u32> {
        let com = [
            self.weight_from.map(|w| w.saturating_sub(2)),
            self.m_from.map(|a| a.saturating_sub(1)),
            self.n_from.filter(|&b| b <= 1).map(|_| 0),
        ]
        .into_iter()
        .flatten()
        .min()?;
        let sq = if p == 2 { self.sq_from?.saturating_sub(1) } else { 0 };
        Some(com.max(sq).max(1))
    }

    /// Unit vectors of the core elements inside the window.
    pub fn units(&self, layout: &ZLayout) -> Vec<SparseVec> {
        layout
            .indices()
            .iter()
            .enumerate()
            .filter(|(_, &i)| self.contains(i))
            .map(|(o, _)| SparseVec::unit(layout.field(), o as u32))
            .collect()
    }
}

/// Restriction of window coordinates to those outside a coordinate subspace.
#[derive(Debug, Clone)]
pub struct Projector {
    col: Vec<u32>,
    ncols: usize,
}

impl Projector {
    pub fn new<F: Fn(BasisIndex) -> bool>(layout: &ZLayout, killed: F) -> Self {
        let mut ncols = 0usize;
        let col = layout
            .indices()
            .iter()
            .map(|&i| {
                if killed(i) {
                    u32::MAX
                } else {
                    ncols += 1;
                    ncols as u32 - 1
                }
            })
            .collect();
        Projector { col, ncols }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn kills(&self, ordinal: u32) -> bool {
        self.col[ordinal as usize] == u32::MAX
    }

    pub fn project(&self, v: &SparseVec) -> SparseVec {
        v.remap(|o| Some(self.col[o as usize]).filter(|&c| c != u32::MAX))
    }

    pub fn project_all(&self, vs: &[SparseVec]) -> Vec<SparseVec> {
        vs.iter().map(|v| self.project(v)).filter(|v| !v.is_zero()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Markers {
    /// min{i : γ_i(𝔊) ≤ S_k}
    pub n_k: u32,
    /// contribution from the H-generators c_j
    pub n_h: u32,
    /// contribution from S_k ∩ Z
    pub n_z: u32,
    /// min{i : x^{p^i} ∈ S_k}
    pub alpha_k: u32,
    /// min{j : c_j² ∈ S_k} (p = 2 only)
    pub m_k: Option<u32>,
}

/// S_k ∩ Z modulo Z_{>W}: the span of the core units and `extras`.
#[derive(Debug, Clone)]
pub struct SeriesLevel {
    pub series: SeriesId,
    pub k: u32,
    pub p: u8,
    pub window: u32,
    pub core: Core,
    /// extra generators, in window ordinals
    pub extras: Vec<SparseVec>,
    pub markers: Markers,
    pub notes: Vec<String>,
    pub ctx: GWindowCtx,
}

impl SeriesLevel {
    /// Generator vectors: core units followed by the extras.
    pub fn gens(&self) -> Vec<SparseVec> {
        let mut g = self.core.units(self.ctx.layout());
        g.extend(self.extras.iter().cloned());
        g
    }

    pub fn projector(&self) -> Projector {
        let core = self.core;
        Projector::new(self.ctx.layout(), |i| core.contains(i))
    }

    /// log_p |Z : S_k ∩ Z|.
    pub fn codim(&self) -> usize {
        let pr = self.projector();
        let e = pr.project_all(&self.extras);
        pr.ncols() - rank(self.ctx.field(), &e).expect("same field")
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        let pr = self.projector();
        let e = pr.project_all(&self.extras);
        let s = EchelonSpan::from_vectors(self.ctx.field(), &e).expect("same field");
        s.contains(&pr.project(v)).expect("same field")
    }
}

/// [i]_p = (p^i − 1)/(p − 1).
pub fn bracket(i: u32, p: u32) -> u32 {
    (p.pow(i) - 1) / (p - 1)
}

fn pw(p: u32, e: u32) -> u32 {
    p.pow(e)
}

/// The window policy for a level.
pub fn policy_window(series: SeriesId, k: u32, p: u32) -> u32 {
    let s = effective(series, p);
    if k == 0 {
        return 2;
    }
    match (s, p) {
        (SeriesId::L | SeriesId::D, _) => 2 * k + 8,
        (SeriesId::M | SeriesId::P, 2) => pw(2, k + 1) + 2,
        (SeriesId::M | SeriesId::P, _) => pw(p, k) + 2,
        (SeriesId::F, 2) => pw(2, k) + pw(2, k - 1) + 2,
        (SeriesId::F, _) => bracket(k, p) + 2,
        (SeriesId::I, _) => 2 * pw(p, k - 1) * (p - 1) + pw(p, k),
    }
}

// I coincides with F for p = 2; odd-p P is measured through M
fn effective(series: SeriesId, p: u32) -> SeriesId {
    match (series, p) {
        (SeriesId::I, 2) => SeriesId::F,
        (SeriesId::P, q) if q != 2 => SeriesId::M,
        (s, _) => s,
    }
}

/// The core of S_k ∩ Z.
pub fn series_core(series: SeriesId, k: u32, p: u32) -> Core {
    if k == 0 {
        return Core::all();
    }
    let two = p == 2;
    let sq = |s: u32| if two { Some(s) } else { None };
    match effective(series, p) {
        SeriesId::L => Core { sq_from: sq(k.max(1)), weight_from: Some(k + 1), ..Core::none() },
        SeriesId::D => Core { sq_from: sq((k + 1).div_ceil(2)), weight_from: Some(k + 1), ..Core::none() },
        SeriesId::M => Core { sq_from: sq(pw(p, k) + 1), m_from: Some(pw(p, k) + 1), ..Core::none() },
        SeriesId::P => Core { sq_from: Some(pw(2, k - 1)), m_from: Some(pw(2, k)), ..Core::none() },
        SeriesId::F if two => theta_core(k, 2),
        SeriesId::F => theta_core(k, p),
        SeriesId::I => Core { m_from: Some(pw(p, k)), ..Core::none() },
    }
}

/// Θ_k (with Q_k for p = 2).
pub fn theta_core(k: u32, p: u32) -> Core {
    if p == 2 {
        Core { sq_from: Some(pw(2, k - 1)), m_from: Some(pw(2, k)), n_from: Some(pw(2, k - 1)), ..Core::none() }
    } else {
        Core { m_from: Some(1 + bracket(k, p)), n_from: Some(1 + bracket(k - 1, p)), ..Core::none() }
    }
}

fn alpha(series: SeriesId, k: u32, p: u32) -> u32 {
    if series != SeriesId::D {
        return k;
    }
    // ⌈log_p(k + 1)⌉
    let mut a = 0;
    while (p as u64).pow(a) < k as u64 + 1 {
        a += 1;
    }
    a
}

fn n_h(series: SeriesId, k: u32, p: u32) -> u32 {
    if k == 0 {
        return 1;
    }
    match (series, p) {
        (SeriesId::L | SeriesId::D, _) => k + 1,
        // γ_i(𝔊) ≤ M_k iff i exceeds the class of G_k
        (SeriesId::M, 2) => pw(2, k + 1),
        (SeriesId::M, _) => 2 * pw(p, k) - 1,
        (SeriesId::P, 2) => pw(2, k + 1),
        (SeriesId::P, _) => pw(p, k),
        (SeriesId::F | SeriesId::I, 2) => pw(2, k),
        (SeriesId::F, _) => 1 + bracket(k, p),
        // measured: c_{p^k} ∉ I_k once k ≥ 2 (the d̃ part is missing)
        (SeriesId::I, _) if k >= 2 => pw(p, k) + 1,
        (SeriesId::I, _) => pw(p, k),
    }
}

/// Build the level S_k ∩ Z. `window` overrides the policy but must be exact.
pub fn series_level(series: SeriesId, k: u32, p: u32, window: Option<u32>, budget: u32) -> Result<SeriesLevel, FiltError> {
    let field = Fp::new(p)?;
    let core = series_core(series, k, p);
    let exact = core.exact_window(field.p()).expect("every series core is cofinite");
    let w = match window {
        Some(w) if w < exact => return Err(FiltError::WindowTooSmall { window: w, needed: exact }),
        Some(w) => w,
        None => policy_window(series, k, p).max(exact),
    };
    if w > budget {
        return Err(FiltError::Budget { needed: w, budget });
    }
    let ctx = GWindowCtx::new(field, w)?;
    let mut notes = Vec::new();
    let eff = effective(series, p);
    if eff != series {
        notes.push(alloc::format!("{} is computed as {} for p = {}", series, eff, p));
    }
    let extras = if k == 0 {
        Vec::new()
    } else {
        match (eff, p) {
            (SeriesId::P, 2) => p_finite_extras(&ctx, k),
            (SeriesId::F, 2) => {
                notes.push("F ∩ Z taken as Q_kΨ_kΛ_kΘ_k".into());
                let mut e = psi(&ctx, k);
                e.extend(lambda2(&ctx, k));
                e
            }
            (SeriesId::F, _) => lambda_odd(&ctx, k),
            (SeriesId::I, _) => {
                notes.push("I ∩ Z measured by Θ̃_kΛ̃_kΩ̃_k".into());
                let mut e = lambda_t(&ctx, k);
                e.extend(omega_t(&ctx, k));
                e
            }
            _ => Vec::new(),
        }
    };
    let n_z = n_z(&ctx, &core, &extras);
    let nh = n_h(eff, k, p);
    let m_k = if p == 2 { Some(core.sq_from.unwrap_or(1).max(1)) } else { None };
    let markers = Markers { n_k: n_z.max(nh), n_h: nh, n_z, alpha_k: alpha(eff, k, p), m_k };
    Ok(SeriesLevel { series, k, p: field.p(), window: w, core, extras, markers, notes, ctx })
}

// 1 + max{deg b : b a basis element not in S_k ∩ Z}, deg CSq(l) = l, deg Com(m,n) = m + n
fn n_z(ctx: &GWindowCtx, core: &Core, extras: &[SparseVec]) -> u32 {
    let layout = ctx.layout();
    let pr = Projector::new(layout, |i| core.contains(i));
    let e = pr.project_all(extras);
    let span = EchelonSpan::from_vectors(ctx.field(), &e).expect("same field");
    let deg = |i: BasisIndex| match i {
        BasisIndex::CSq(l) => l,
        BasisIndex::Com(m, n) => m + n,
    };
    let mut best = 1;
    for (o, &i) in layout.indices().iter().enumerate() {
        if core.contains(i) || deg(i) < best {
            continue;
        }
        let c = pr.col[o];
        let inside = !span.rows().is_empty() && span.contains(&SparseVec::unit(ctx.field(), c)).expect("same field");
        if !inside {
            best = deg(i);
        }
    }
    best + 1
}

/// γ_i(𝔊) ∩ Z in the window: c_l² (l ≥ i) and z_{m,n} (m + n ≥ i).
pub fn gamma_cap_z(ctx: &GWindowCtx, i: u32) -> Vec<SparseVec> {
    Core { sq_from: Some(i), weight_from: Some(i), ..Core::none() }.units(ctx.layout())
}

/// Span of the gens closed under z ↦ [z, x]; this is the normal closure in Z.
pub fn x_closure(ctx: &GWindowCtx, gens: &[SparseVec]) -> EchelonSpan {
    let mut span = EchelonSpan::new(ctx.field());
    let mut queue: Vec<SparseVec> = gens.to_vec();
    while let Some(v) = queue.pop() {
        let r = span.insert(&v).expect("same field");
        if !r.is_zero() {
            let t = ctx.z_comm_x(&r);
            if !t.is_zero() {
                queue.push(t);
            }
        }
    }
    span
}

// [v, x^{p^from}, x^{p^{from+1}}, …, x^{p^{to-1}}]
fn push_ladder(ctx: &GWindowCtx, v: &SparseVec, from: u32, to: u32) -> SparseVec {
    let p = ctx.p() as u32;
    let mut v = v.clone();
    for t in from..to {
        v = ctx.z_comm_xq_iter(&v, p.pow(t), 1);
    }
    v
}

fn nonzero(vs: Vec<SparseVec>) -> Vec<SparseVec> {
    vs.into_iter().filter(|v| !v.is_zero()).collect()
}

/// Finite form of L_kQ_k modulo the P-core: w_{i,i,k} (i ≤ 2^{k−1}) and
/// [z_{j+1,j}, x, (2^k − 1)] (j < 2^{k−1}).
fn p_finite_extras(ctx: &GWindowCtx, k: u32) -> Vec<SparseVec> {
    let h = pw(2, k - 1);
    let mut out: Vec<SparseVec> = (1..=h).map(|i| ctx.w_ijk(i, i, k)).collect();
    for j in 1..h {
        out.push(ctx.z_comm_x_iter(&ctx.zvec_pair(j + 1, j), pw(2, k) - 1));
    }
    nonzero(out)
}

/// Ψ_k (p = 2).
fn psi(ctx: &GWindowCtx, k: u32) -> Vec<SparseVec> {
    let mut out = Vec::new();
    for l in 2..=k {
        for j in pw(2, l - 2)..pw(2, l - 1) {
            // [c_j², x^{2^{l−1}}] ≡ [w_{j,j,l−1}, x] modulo Q_l
            let g = ctx.z_comm_x(&ctx.w_ijk(j, j, l - 1));
            out.push(push_ladder(ctx, &g, l, k));
        }
    }
    nonzero(out)
}

/// Λ_k (p = 2).
fn lambda2(ctx: &GWindowCtx, k: u32) -> Vec<SparseVec> {
    let mut out = Vec::new();
    for l in 2..k {
        for n in pw(2, l - 1)..pw(2, l) {
            for m in n + 1..pw(2, l) {
                out.push(push_ladder(ctx, &ctx.zvec_pair(m, n), l, k));
            }
        }
    }
    nonzero(out)
}

/// Λ_k (odd p), restricted to the generators not already inside Θ_k.
fn lambda_odd(ctx: &GWindowCtx, k: u32) -> Vec<SparseVec> {
    let p = ctx.p() as u32;
    let mut out = Vec::new();
    for i in 2..k {
        let lo = 1 + bracket(i, p);
        for n in lo..1 + bracket(k - 1, p) {
            for m in n + 1..(1 + bracket(k, p)).min(ctx.window() + 1) {
                out.push(push_ladder(ctx, &ctx.zvec_pair(m, n), i, k));
            }
        }
    }
    nonzero(out)
}

/// Index pairs of the printed generators of Λ̃_k.
pub fn lambda_t_pairs(p: u32, k: u32) -> Vec<(u32, u32)> {
    let q = pw(p, k - 1);
    let mut out = Vec::new();
    for m in q..pw(p, k) {
        for n in m - (m / q) * q..q {
            if n >= 1 {
                out.push((m, n));
            }
        }
    }
    for t in 2..=p.saturating_sub(2) {
        out.push((t * q, q));
    }
    out
}

fn tilde_push(ctx: &GWindowCtx, v: &SparseVec, k: u32) -> SparseVec {
    let p = ctx.p() as u32;
    ctx.z_comm_xq_iter(v, pw(p, k - 1), p - 1)
}

/// Λ̃_k (odd p).
fn lambda_t(ctx: &GWindowCtx, k: u32) -> Vec<SparseVec> {
    let p = ctx.p() as u32;
    nonzero(lambda_t_pairs(p, k).into_iter().map(|(m, n)| tilde_push(ctx, &ctx.zvec_pair(m, n), k)).collect())
}

/// Ω̃_k (odd p): Ω̃_1 = Λ̃_1, Ω̃_k = [Ω̃_{k−1} ∪ Λ̃_{k−1}, x^{p^{k−1}}, (p − 1)].
fn omega_t(ctx: &GWindowCtx, k: u32) -> Vec<SparseVec> {
    if k == 1 {
        return lambda_t(ctx, 1);
    }
    let mut prev = omega_t(ctx, k - 1);
    prev.extend(lambda_t(ctx, k - 1));
    nonzero(prev.iter().map(|v| tilde_push(ctx, v, k)).collect())
}

/// L̃_k (odd p): x-closure of w̃_{i,j,k} (i, j ≥ p^{k−1}) and d̃_k(c_{p^{k−1}}).
fn l_t(ctx: &GWindowCtx, k: u32) -> Result<Vec<SparseVec>, FiltError> {
    let p = ctx.p() as u32;
    let w = ctx.window();
    let mut gens = Vec::new();
    for i in pw(p, k - 1)..=w {
        for j in pw(p, k - 1)..=w {
            gens.push(ctx.tilde_w(i, j, k));
        }
    }
    // printed as d̃_k(y); y ∉ γ_{p^{k−1}} once k ≥ 2, and the lowest generator there is c_{p^{k−1}}
    gens.push(ctx.tilde_d(&ctx.c(pw(p, k - 1))?, k)?);
    Ok(x_closure(ctx, &nonzero(gens)).rows().to_vec())
}

/// Ψ̃_k (odd p): Ψ̃_1 = L̃_1, Ψ̃_k = [Ψ̃_{k−1} ∪ L̃_{k−1}, x^{p^{k−1}}, (p − 1)].
fn psi_t(ctx: &GWindowCtx, k: u32) -> Result<Vec<SparseVec>, FiltError> {
    if k == 1 {
        return l_t(ctx, 1);
    }
    let mut prev = psi_t(ctx, k - 1)?;
    prev.extend(l_t(ctx, k - 1)?);
    Ok(nonzero(prev.iter().map(|v| tilde_push(ctx, v, k)).collect()))
}

/// L_k: normal closure of the w_{i,j,k}, z_{m,n} (m ≥ p^k) and, for odd p, d_k(y).
fn l_full(ctx: &GWindowCtx, k: u32) -> Result<Vec<SparseVec>, FiltError> {
    let p = ctx.p() as u32;
    let w = ctx.window();
    let mut gens = Core { m_from: Some(pw(p, k)), ..Core::none() }.units(ctx.layout());
    for i in 1..=w {
        for j in 1..=w {
            gens.push(ctx.w_ijk(i, j, k));
        }
    }
    if p != 2 {
        gens.push(ctx.d_k(&ctx.y(), k)?);
    }
    Ok(x_closure(ctx, &nonzero(gens)).rows().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Named {
    Q,
    L,
    Theta,
    Lambda,
    Psi,
    ThetaT,
    LambdaT,
    OmegaT,
    PsiT,
    LT,
    /// Z_(r) = ⟨z_{m,n} : m, n ≥ r⟩
    ZR(u32),
}

impl Named {
    pub fn name(self) -> &'static str {
        match self {
            Named::Q => "Q_k",
            Named::L => "L_k",
            Named::Theta => "Θ_k",
            Named::Lambda => "Λ_k",
            Named::Psi => "Ψ_k",
            Named::ThetaT => "Θ̃_k",
            Named::LambdaT => "Λ̃_k",
            Named::OmegaT => "Ω̃_k",
            Named::PsiT => "Ψ̃_k",
            Named::LT => "L̃_k",
            Named::ZR(_) => "Z_(r)",
        }
    }
}

/// Generators of a named subgroup of Z, in the window of `ctx`.
pub fn named_subgroup(ctx: &GWindowCtx, name: Named, k: u32) -> Result<Vec<SparseVec>, FiltError> {
    let p = ctx.p();
    let two = p == 2;
    let parity = |ok: bool| if ok { Ok(()) } else { Err(FiltError::Parity { name: name.name(), p }) };
    let k_pos = |k: u32| if k >= 1 { Ok(()) } else { Err(FiltError::Parity { name: name.name(), p }) };
    let layout = ctx.layout();
    match name {
        Named::ZR(r) => Ok(Core { n_from: Some(r.max(1)), ..Core::none() }
            .units(layout)
            .into_iter()
            .filter(|v| matches!(layout.index(v.entries()[0].0), BasisIndex::Com(..)))
            .collect()),
        Named::Q => {
            parity(two)?;
            k_pos(k)?;
            Ok(Core { sq_from: Some(pw(2, k - 1)), ..Core::none() }.units(layout))
        }
        Named::L => {
            k_pos(k)?;
            l_full(ctx, k)
        }
        Named::Theta => {
            k_pos(k)?;
            let mut c = theta_core(k, p as u32);
            c.sq_from = None;
            Ok(c.units(layout))
        }
        Named::Lambda => {
            k_pos(k)?;
            Ok(if two { lambda2(ctx, k) } else { lambda_odd(ctx, k) })
        }
        Named::Psi => {
            parity(two)?;
            k_pos(k)?;
            Ok(psi(ctx, k))
        }
        Named::ThetaT => {
            parity(!two)?;
            Ok(Core { m_from: Some(pw(p as u32, k)), ..Core::none() }.units(layout))
        }
        Named::LambdaT => {
            parity(!two)?;
            k_pos(k)?;
            Ok(lambda_t(ctx, k))
        }
        Named::OmegaT => {
            parity(!two)?;
            k_pos(k)?;
            Ok(omega_t(ctx, k))
        }
        Named::PsiT => {
            parity(!two)?;
            k_pos(k)?;
            psi_t(ctx, k)
        }
        Named::LT => {
            parity(!two)?;
            k_pos(k)?;
            l_t(ctx, k)
        }
    }
}

/// log_p of the quotient span(a ∪ b)/span(b) after removing the coordinates
/// in `core` (which is assumed to lie in span(b)).
pub fn quotient_dim_mod_core(ctx: &GWindowCtx, core: &Core, a: &[SparseVec], b: &[SparseVec]) -> usize {
    let pr = Projector::new(ctx.layout(), |i| core.contains(i));
    let pa = pr.project_all(a);
    let pb = pr.project_all(b);
    let rb = rank(ctx.field(), &pb).expect("same field");
    let mut all = pb;
    all.extend(pa);
    rank(ctx.field(), &all).expect("same field") - rb
}

/// Image of S_k in a finite quotient G_{k'}: the normal closure of x^{p^α},
/// the c_j with n^H ≤ j ≤ W and the Z-generators `zgens` (window ordinals).
pub fn fin_image(fin: &FinGroup, level: &SeriesLevel, zgens: &[SparseVec]) -> Result<FinSubgroup, GfinError> {
    let emb = Embedding::new(fin, &level.ctx)?;
    let p = level.p as i64;
    let mut gens = alloc::vec![fin.x_pow(p.pow(level.markers.alpha_k))];
    for j in level.markers.n_h..=level.window {
        gens.push(emb.c_image(j).clone());
    }
    for z in zgens {
        gens.push(emb.apply_z(fin, z));
    }
    gens.retain(|g| !g.is_identity());
    Ok(fin.normal_closure(&gens))
}

/// Span of the images of Z-vectors in Z_{k'} (dense coordinates).
pub fn fin_z_span(fin: &FinGroup, level: &SeriesLevel, zgens: &[SparseVec]) -> Result<EchelonSpan, GfinError> {
    let emb = Embedding::new(fin, &level.ctx)?;
    let vs: Vec<SparseVec> =
        zgens.iter().map(|z| SparseVec::from_dense(fin.field(), &emb.apply_z(fin, z).z)).collect();
    Ok(EchelonSpan::from_vectors(fin.field(), &vs).expect("same field"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gfin::FinElement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn image(fin: &FinGroup, s: SeriesId, k: u32, p: u32) -> FinSubgroup {
        let w = policy_window(s, k, p).max(fin.min_embed_window());
        let lv = series_level(s, k, p, Some(w), 1000).unwrap();
        fin_image(fin, &lv, &lv.gens()).unwrap()
    }

    fn check_series(fin: &FinGroup, s: SeriesId, p: u32, oracle: &[FinSubgroup], kmax: u32) {
        let triv = fin.trivial();
        for k in 0..=kmax {
            let o = oracle.get(k as usize).unwrap_or(&triv);
            let im = image(fin, s, k, p);
            assert!(im.equals(fin, o), "{s} p={p} k={k}: {} vs {}", im.log_order(fin), o.log_order(fin));
        }
    }

    #[test]
    fn oracle_lower_and_dimension_p2() {
        let fin = FinGroup::new(Fp::new(2).unwrap(), 3).unwrap();
        check_series(&fin, SeriesId::L, 2, &fin.lower_p_series(), 16);
        check_series(&fin, SeriesId::D, 2, &fin.dimension_series(), 16);
    }

    #[test]
    fn oracle_lower_and_dimension_p3() {
        let fin = FinGroup::new(Fp::new(3).unwrap(), 2).unwrap();
        check_series(&fin, SeriesId::L, 3, &fin.lower_p_series(), 18);
        check_series(&fin, SeriesId::D, 3, &fin.dimension_series(), 18);
    }

    #[test]
    fn oracle_frattini_and_power_p2() {
        let fin = FinGroup::new(Fp::new(2).unwrap(), 3).unwrap();
        check_series(&fin, SeriesId::F, 2, &fin.frattini_series(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        // G^{2^k} ∩ Z (sampled) lies in L_kQ_k; the squares c_l² with
        // 2^{k−1} ≤ l < 2^k − 1 are not reached in the oracle.
        let ps = fin.power_series(&mut rng, 3000, 3);
        for k in 1..=3u32 {
            let w = policy_window(SeriesId::P, k, 2).max(fin.min_embed_window());
            let lv = series_level(SeriesId::P, k, 2, Some(w), 1000).unwrap();
            let o = ps[k as usize].z_span();
            assert!(o.is_subspace_of(&fin_z_span(&fin, &lv, &lv.gens()).unwrap()).unwrap());
            let mut narrowed = lv.clone();
            narrowed.core.sq_from = Some((pw(2, k) - 1).max(1));
            let nz = fin_z_span(&fin, &narrowed, &narrowed.gens()).unwrap();
            assert!(nz.is_subspace_of(o).unwrap() && o.is_subspace_of(&nz).unwrap(), "k={k}");
        }
    }

    #[test]
    fn exhaustive_fourth_powers_g2() {
        // all 2^16 elements of G_2: which c_l² lie in G_2^4
        let fin = FinGroup::new(Fp::new(2).unwrap(), 2).unwrap();
        let mut gens = std::collections::HashSet::new();
        for e in 0..4u32 {
            for bm in 0..16u32 {
                for zm in 0..1024u32 {
                    let g = FinElement {
                        e,
                        b: (0..4).map(|i| ((bm >> i) & 1) as u8).collect(),
                        z: (0..10).map(|i| ((zm >> i) & 1) as u8).collect(),
                    };
                    gens.insert(fin.pow(&g, 4));
                }
            }
        }
        let gens: Vec<_> = gens.into_iter().collect();
        let s = fin.subgroup(&gens);
        let ctx = GWindowCtx::new(Fp::new(2).unwrap(), 6).unwrap();
        let emb = Embedding::new(&fin, &ctx).unwrap();
        let inside: Vec<bool> = (1..=6).map(|l| s.contains(&fin, &fin.pow(emb.c_image(l), 2))).collect();
        assert_eq!(inside, [false, false, true, true, true, true]);
    }

    #[test]
    fn oracle_natural() {
        for (p, kk) in [(2u32, 3u32), (3, 2)] {
            let fin = FinGroup::new(Fp::new(p).unwrap(), kk).unwrap();
            // M_k maps onto the kernel of G_{k'} → G_k
            for k in 0..=kk {
                let im = image(&fin, SeriesId::M, k, p);
                let expect = fin.log_order() - FinGroup::new(Fp::new(p).unwrap(), k).map_or(0, |g| g.log_order());
                let expect = if k == 0 { fin.log_order() } else { expect };
                assert_eq!(im.log_order(&fin), expect, "p={p} k={k}");
            }
        }
    }

    fn ctx(p: u32, w: u32) -> GWindowCtx {
        GWindowCtx::new(Fp::new(p).unwrap(), w).unwrap()
    }

    #[test]
    fn gamma_formula() {
        let c = ctx(2, 50);
        let d = c.layout().dim();
        for i in 2..=40u32 {
            let r = rank(c.field(), &gamma_cap_z(&c, i)).unwrap();
            let expect = if i % 2 == 1 { (i * i - 1) / 4 } else { i * i / 4 };
            assert_eq!((d - r) as u32, expect, "i = {i}");
        }
    }

    #[test]
    fn exact_windows() {
        for s in SeriesId::ALL {
            for p in [2, 3] {
                for k in 0..4 {
                    let c = series_core(s, k, p);
                    let w = c.exact_window(p as u8).unwrap();
                    assert!(policy_window(s, k, p) >= w, "{s} {p} {k}");
                }
            }
        }
    }

    #[test]
    fn markers_m_k() {
        for k in 1..5 {
            let l = series_level(SeriesId::L, k, 2, None, 1000).unwrap();
            assert_eq!(l.markers.m_k, Some(k));
            let d = series_level(SeriesId::D, k, 2, None, 1000).unwrap();
            assert_eq!(d.markers.m_k, Some((k + 1).div_ceil(2)));
            assert_eq!(d.markers.n_k, k + 1);
        }
        let d = series_level(SeriesId::D, 3, 2, None, 1000).unwrap();
        assert_eq!(d.markers.alpha_k, 2);
    }

    #[test]
    fn theta_example() {
        let c = ctx(2, 9);
        let t = named_subgroup(&c, Named::Theta, 2).unwrap();
        for v in &t {
            let (m, n) = c.layout().index(v.entries()[0].0).pair();
            assert!((n >= 2 && m > n) || m >= 4);
        }
        assert!(named_subgroup(&c, Named::ThetaT, 2).is_err());
        let z3 = named_subgroup(&c, Named::ZR(3), 0).unwrap();
        assert!(z3.iter().all(|v| c.layout().index(v.entries()[0].0).min_index() >= 3));
    }

    #[test]
    fn nesting() {
        for p in [2u32, 3] {
            for s in SeriesId::ALL {
                let kmax = match s {
                    SeriesId::L | SeriesId::D => 8,
                    _ if p == 2 => 4,
                    _ => 2,
                };
                for k in 0..kmax {
                    let w = policy_window(s, k, p).max(policy_window(s, k + 1, p));
                    let a = series_level(s, k, p, Some(w), 1000).unwrap();
                    let b = series_level(s, k + 1, p, Some(w), 1000).unwrap();
                    for g in b.gens() {
                        assert!(a.contains(&g), "{s} p={p} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn frattini_ranks() {
        for (k, want) in [(2u32, 0usize), (3, 1), (4, 7)] {
            let w = policy_window(SeriesId::F, k, 2);
            let c = ctx(2, w);
            let theta = Core { sq_from: None, ..theta_core(k, 2) };
            let lam = named_subgroup(&c, Named::Lambda, k).unwrap();
            assert_eq!(quotient_dim_mod_core(&c, &theta, &lam, &[]), want);
            assert_eq!(want as u32, (pw(2, 2 * k - 3) + 1) / 3 - pw(2, k - 2));
        }
        for k in 1..=4u32 {
            let c = ctx(2, policy_window(SeriesId::F, k, 2));
            let psi = named_subgroup(&c, Named::Psi, k).unwrap();
            assert!(rank(c.field(), &psi).unwrap() as u32 <= pw(2, k - 1) - 1);
        }
    }

    #[test]
    fn finite_form_of_lq() {
        for k in 1..=3u32 {
            let lv = series_level(SeriesId::P, k, 2, None, 1000).unwrap();
            let mut full = named_subgroup(&lv.ctx, Named::L, k).unwrap();
            full.extend(named_subgroup(&lv.ctx, Named::Q, k).unwrap());
            assert_eq!(quotient_dim_mod_core(&lv.ctx, &lv.core, &full, &lv.extras), 0, "k={k}");
            assert_eq!(quotient_dim_mod_core(&lv.ctx, &lv.core, &lv.extras, &full), 0, "k={k}");
        }
    }

    #[test]
    fn m_p_bound() {
        for k in 1..=5u32 {
            let w = policy_window(SeriesId::M, k, 2);
            let m = series_level(SeriesId::M, k, 2, Some(w), 1000).unwrap();
            let pl = series_level(SeriesId::P, k, 2, Some(w), 1000).unwrap();
            assert!((m.codim() - pl.codim()) as u32 <= pw(2, k + 1) + pw(2, k - 1));
        }
    }

    #[test]
    fn odd_iterated_power_sandwich() {
        let fin = FinGroup::new(Fp::new(3).unwrap(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let oracle = fin.iterated_power_series(&mut rng, 400, 2);
        for k in 1..=2u32 {
            let w = policy_window(SeriesId::I, k, 3).max(fin.min_embed_window());
            let lv = series_level(SeriesId::I, k, 3, Some(w), 1000).unwrap();
            let lower = fin_image(&fin, &lv, &lv.gens()).unwrap();
            let mut up = lv.gens();
            up.extend(named_subgroup(&lv.ctx, Named::LT, k).unwrap());
            up.extend(named_subgroup(&lv.ctx, Named::PsiT, k).unwrap());
            // c_{p^k} lies in I_k modulo Z, so the upper bound may carry it
            let emb = Embedding::new(&fin, &lv.ctx).unwrap();
            let mut ug = alloc::vec![emb.c_image(pw(3, k)).clone()];
            ug.extend(fin_image(&fin, &lv, &up).unwrap().sequence(&fin));
            let upper = fin.normal_closure(&ug);
            let o = &oracle[k as usize];
            assert!(lower.is_subgroup_of(&fin, o), "k={k} lower {} oracle {}", lower.log_order(&fin), o.log_order(&fin));
            assert!(o.is_subgroup_of(&fin, &upper), "k={k}");
        }
    }

    #[test]
    fn tilde_d_in_theta_lambda_l() {
        use rand::Rng;
        for (p, k) in [(3u32, 1u32), (3, 2), (5, 1), (5, 2), (3, 3)] {
            let w = policy_window(SeriesId::I, k, p);
            let lv = series_level(SeriesId::I, k, p, Some(w), 5000).unwrap();
            let c = &lv.ctx;
            let mut up = lv.gens();
            up.extend(named_subgroup(c, Named::LT, k).unwrap());
            let outside = |d: SparseVec| quotient_dim_mod_core(c, &Core::none(), &[d], &up);
            for j in pw(p, k - 1)..=w {
                assert_eq!(outside(c.tilde_d(&c.c(j).unwrap(), k).unwrap()), 0, "p={p} k={k} j={j}");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..30 {
                let mut h = c.identity();
                for j in pw(p, k - 1)..=w.min(pw(p, k - 1) + 6) {
                    h = c.mul(&h, &c.pow(&c.c(j).unwrap(), rng.random_range(0..p as i64)));
                }
                assert_eq!(outside(c.tilde_d(&h, k).unwrap()), 0, "p={p} k={k}");
            }
        }
        let c = ctx(3, 20);
        assert!(c.tilde_d(&c.y(), 2).is_err());
    }
}
