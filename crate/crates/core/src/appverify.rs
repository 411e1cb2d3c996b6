//! Machine check of the combinatorial lemma
//! [Θ̃_{k−1}, x^{p^{k−1}}, (p−1)] Θ̃_k = Λ̃_k Θ̃_k and of its grid bookkeeping.
//!
//! Everything is computed modulo Θ̃_k = ⟨z_{m,n} : max(m,n) ≥ p^k⟩, which is
//! exactly the window kernel at W = p^k − 1, so the window model is exact.

use alloc::vec::Vec;

use crate::filtser::{lambda_t_pairs, DEFAULT_WINDOW_BUDGET};
use crate::fplin::{rank, Fp, SparseVec};
use crate::gsymb::{GWindowCtx, GsymbError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AppError {
    #[error("p = {0} must be an odd prime")]
    EvenOrNotPrime(u32),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("window {needed} exceeds budget {budget}")]
    Budget { needed: u32, budget: u32 },
    #[error(transparent)]
    Gsymb(#[from] GsymbError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CellKind {
    /// 𝒵_{i,j}
    Square,
    /// 𝒱_i
    Triangle,
    /// 𝒰_{i,1} ⊆ 𝒵_{i,1}
    Upper,
    /// 𝒲_{i,j} ⊆ 𝒵_{i,j}
    Corner,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridCell {
    pub kind: CellKind,
    pub i: u32,
    /// 0 for triangles
    pub j: u32,
    pub p: u32,
    pub k: u32,
    /// pairs (m, n), m > n
    pub members: Vec<(u32, u32)>,
}

impl GridCell {
    /// Squares and triangles partition 𝒵; the other two kinds are marked subsets.
    pub fn is_partition_cell(&self) -> bool {
        matches!(self.kind, CellKind::Square | CellKind::Triangle)
    }
}

fn check(p: u32, k: u32) -> Result<(), AppError> {
    if p == 2 || !crate::fplin::is_prime(p) {
        return Err(AppError::EvenOrNotPrime(p));
    }
    if k == 0 {
        return Err(AppError::ZeroK);
    }
    Ok(())
}

/// 𝒵 = {z_{m,n} : p^{k−1} ≤ m < p^k, 1 ≤ n < m}.
pub fn big_z(p: u32, k: u32) -> Vec<(u32, u32)> {
    let q = p.pow(k - 1);
    (q..p * q).flat_map(|m| (1..m).map(move |n| (m, n))).collect()
}

pub fn grid_decompose(p: u32, k: u32) -> Result<Vec<GridCell>, AppError> {
    check(p, k)?;
    let q = p.pow(k - 1);
    let cell = |kind, i, j, members| GridCell { kind, i, j, p, k, members };
    let mut out = Vec::new();
    for i in 1..p {
        for j in 1..=i {
            let sq: Vec<(u32, u32)> = (i * q..(i + 1) * q)
                .flat_map(|m| ((j - 1) * q..j * q).filter(|&n| n >= 1).map(move |n| (m, n)))
                .collect();
            out.push(cell(CellKind::Square, i, j, sq));
        }
        let tri = (i * q..(i + 1) * q).flat_map(|m| (i * q..m).map(move |n| (m, n))).collect();
        out.push(cell(CellKind::Triangle, i, 0, tri));
        let up = (i * q..(i + 1) * q).flat_map(|m| (1..q).filter(move |&n| n + i * q >= m).map(move |n| (m, n))).collect();
        out.push(cell(CellKind::Upper, i, 1, up));
        for j in 2..=i {
            // 𝒲_{1,2} is empty by convention
            let w = if i == 1 { Vec::new() } else { alloc::vec![(i * q, (j - 1) * q)] };
            out.push(cell(CellKind::Corner, i, j, w));
        }
    }
    if p > 2 {
        out.push(cell(CellKind::Corner, 1, 2, Vec::new()));
    }
    Ok(out)
}

/// Whether the square and triangle cells are pairwise disjoint and cover 𝒵.
pub fn is_exact_partition(p: u32, k: u32, cells: &[GridCell]) -> bool {
    let mut seen: Vec<(u32, u32)> = cells.iter().filter(|c| c.is_partition_cell()).flat_map(|c| c.members.iter().copied()).collect();
    let n = seen.len();
    seen.sort_unstable();
    seen.dedup();
    seen.len() == n && seen == big_z(p, k)
}

/// The window model used by the checks below.
pub fn appendix_ctx(p: u32, k: u32, budget: u32) -> Result<GWindowCtx, AppError> {
    check(p, k)?;
    let w = p.pow(k) - 1;
    if w > budget {
        return Err(AppError::Budget { needed: w, budget });
    }
    Ok(GWindowCtx::new(Fp::new(p).expect("prime"), w.max(2))?)
}

/// [z_{m,n}, x^{p^{k−1}}, (p−1)] modulo Θ̃_k.
pub fn push(ctx: &GWindowCtx, k: u32, m: u32, n: u32) -> SparseVec {
    let p = ctx.p() as u32;
    ctx.z_comm_xq_iter(&ctx.zvec_pair(m, n), p.pow(k - 1), p - 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaPushReport {
    pub p: u32,
    pub k: u32,
    pub window: u32,
    /// dim of [Θ̃_{k−1}, x^{p^{k−1}}, (p−1)] Θ̃_k / Θ̃_k
    pub push_dim: usize,
    /// dim of Λ̃_k Θ̃_k / Θ̃_k
    pub lambda_dim: usize,
    /// dim of the sum of both
    pub sum_dim: usize,
    pub equal: bool,
    /// number of printed generators of Λ̃_k
    pub lambda_generators: usize,
    /// printed generators minus lambda_dim
    pub rank_deficit: usize,
    /// dims of Θ̃_{k,τ}/Θ̃_k for τ = 0, …, p−1 (τ = p−1 adds 𝒰_{1,1})
    pub ladder: Vec<usize>,
    pub ladder_monotone: bool,
    /// the top of the ladder equals the full push span
    pub ladder_top_equal: bool,
}

impl ThetaPushReport {
    pub fn passed(&self) -> bool {
        self.equal && self.ladder_monotone && self.ladder_top_equal
    }
}

pub fn verify_theta_push(p: u32, k: u32) -> Result<ThetaPushReport, AppError> {
    verify_theta_push_with_budget(p, k, DEFAULT_WINDOW_BUDGET)
}

pub fn verify_theta_push_with_budget(p: u32, k: u32, budget: u32) -> Result<ThetaPushReport, AppError> {
    let ctx = appendix_ctx(p, k, budget)?;
    let f = ctx.field();
    let pushes: Vec<SparseVec> = big_z(p, k).into_iter().map(|(m, n)| push(&ctx, k, m, n)).collect();
    let pairs = lambda_t_pairs(p, k);
    let lam: Vec<SparseVec> = pairs.iter().map(|&(m, n)| push(&ctx, k, m, n)).collect();
    let push_dim = rank(f, &pushes).expect("same field");
    let lambda_dim = rank(f, &lam).expect("same field");
    let mut both = pushes.clone();
    both.extend(lam.iter().cloned());
    let sum_dim = rank(f, &both).expect("same field");

    let cells = grid_decompose(p, k)?;
    let find = |kind: CellKind, i: u32, j: u32| {
        cells.iter().find(|c| c.kind == kind && c.i == i && c.j == j).map(|c| c.members.clone()).unwrap_or_default()
    };
    let mut acc: Vec<SparseVec> = Vec::new();
    let mut ladder = alloc::vec![0usize];
    for tau in 1..p {
        let mut zs = find(CellKind::Upper, p - tau, 1);
        if p - tau >= 2 {
            zs.extend(find(CellKind::Corner, p - tau - 1, 2));
        }
        acc.extend(zs.iter().map(|&(m, n)| push(&ctx, k, m, n)));
        ladder.push(rank(f, &acc).expect("same field"));
    }
    let ladder_monotone = ladder.windows(2).all(|w| w[0] <= w[1]);
    let mut top = acc.clone();
    top.extend(pushes.iter().cloned());
    let ladder_top_equal = *ladder.last().expect("nonempty") == push_dim && rank(f, &top).expect("same field") == push_dim;
    Ok(ThetaPushReport {
        p,
        k,
        window: ctx.window(),
        push_dim,
        lambda_dim,
        sum_dim,
        equal: push_dim == lambda_dim && sum_dim == push_dim,
        lambda_generators: pairs.len(),
        rank_deficit: pairs.len() - lambda_dim,
        ladder,
        ladder_monotone,
        ladder_top_equal,
    })
}

/// binom(n, r) mod p.
pub fn binom_mod(n: u32, r: u32, p: u32) -> u32 {
    if r > n {
        return 0;
    }
    let mut row = alloc::vec![0u32; n as usize + 1];
    row[0] = 1;
    for i in 1..=n as usize {
        for j in (1..=i).rev() {
            row[j] = (row[j] + row[j - 1]) % p;
        }
    }
    row[r as usize]
}

/// The displayed product expansion of [z_{m,n}, x^{p^{k−1}}, (p−1)] modulo Θ̃_k.
pub fn binomial_expansion(ctx: &GWindowCtx, k: u32, m: u32, n: u32) -> SparseVec {
    let p = ctx.p() as u32;
    let q = p.pow(k - 1);
    let mut terms = Vec::new();
    for s in 1..p {
        for t in 1..=s {
            let e = binom_mod(p - 1, s, p) * binom_mod(s, t, p) % p;
            let v = ctx.zvec_pair(m + (p - 1 - t) * q, n + (p - 1 - s + t) * q);
            terms.extend(v.entries().iter().map(|&(o, c)| (o, c as i64 * e as i64)));
        }
    }
    SparseVec::from_terms(ctx.field(), terms)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinomialReport {
    pub p: u32,
    pub k: u32,
    pub m: u32,
    pub n: u32,
    pub exact: SparseVec,
    pub displayed: SparseVec,
    pub matches: bool,
    /// equal spans (same vector up to a nonzero scalar)
    pub matches_up_to_scalar: bool,
}

pub fn verify_binomial_expansion(p: u32, k: u32, m: u32, n: u32) -> Result<BinomialReport, AppError> {
    let ctx = appendix_ctx(p, k, DEFAULT_WINDOW_BUDGET)?;
    let exact = push(&ctx, k, m, n);
    let displayed = binomial_expansion(&ctx, k, m, n);
    let matches_up_to_scalar = (1..p as u8).any(|s| displayed.scale(s) == exact);
    Ok(BinomialReport { p, k, m, n, matches: exact == displayed, matches_up_to_scalar, exact, displayed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        for (p, k) in [(3u32, 2u32), (3, 3), (5, 2), (5, 1), (7, 2)] {
            let cells = grid_decompose(p, k).unwrap();
            assert!(is_exact_partition(p, k, &cells), "({p},{k})");
            let q = p.pow(k - 1) as usize;
            for c in &cells {
                let want = match c.kind {
                    CellKind::Square if c.j > 1 => q * q,
                    CellKind::Square => q * (q - 1),
                    CellKind::Triangle => q * (q - 1) / 2,
                    CellKind::Corner if c.i == 1 => 0,
                    CellKind::Corner => 1,
                    // n ≥ μ with 1 ≤ n < q and 0 ≤ μ < q
                    CellKind::Upper => (0..q).map(|mu| (mu.max(1)..q).count()).sum::<usize>(),
                };
                assert_eq!(c.members.len(), want, "{c:?}");
            }
        }
        assert_eq!(big_z(3, 2).len(), 27);
        let cells = grid_decompose(3, 2).unwrap();
        let w12 = cells.iter().find(|c| c.kind == CellKind::Corner && c.i == 1 && c.j == 2).unwrap();
        assert!(w12.members.is_empty());
    }

    #[test]
    fn upper_cells_match_printed_lambda() {
        for (p, k) in [(3u32, 2u32), (5, 2), (3, 3)] {
            let cells = grid_decompose(p, k).unwrap();
            let mut ours: Vec<(u32, u32)> = cells.iter().filter(|c| c.kind == CellKind::Upper).flat_map(|c| c.members.clone()).collect();
            ours.extend(cells.iter().filter(|c| c.kind == CellKind::Corner && c.j == 2 && c.i <= p - 2).flat_map(|c| c.members.clone()));
            let mut printed = lambda_t_pairs(p, k);
            ours.sort_unstable();
            printed.sort_unstable();
            assert_eq!(ours, printed);
        }
    }

    #[test]
    fn theta_push_small() {
        for (p, k) in [(3u32, 1u32), (3, 2), (5, 2)] {
            let r = verify_theta_push(p, k).unwrap();
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn binomials_alternate() {
        for p in [3u32, 5, 7, 11, 13] {
            for s in 0..p {
                let want = if s % 2 == 0 { 1 } else { p - 1 };
                assert_eq!(binom_mod(p - 1, s, p), want);
            }
        }
    }

    #[test]
    fn binomial_examples() {
        for (m, n) in [(4u32, 1u32), (3, 2)] {
            let r = verify_binomial_expansion(3, 2, m, n).unwrap();
            assert!(r.matches, "{r:?}");
        }
    }

    #[test]
    fn rejects_even_prime() {
        assert_eq!(grid_decompose(2, 2), Err(AppError::EvenOrNotPrime(2)));
        assert!(verify_theta_push(4, 2).is_err());
    }
}
