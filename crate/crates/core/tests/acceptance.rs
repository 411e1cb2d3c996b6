//! Acceptance run: one PASS/FAIL line per criterion (sub-lines for the
//! individual cases). Red criteria are reported, not hidden; the process exits
//! non-zero on a red criterion only when HSPEC_ACCEPTANCE_STRICT=1.

use std::time::Instant;

use hspec_core::filtser::SeriesId;
use hspec_core::hdim::{
    density_sequence, required_window, spectrum_scan, to_f64, witness, DensityOpts, DensityReport, Mode, ZWord,
};
use hspec_core::suites::{self, Check};
use hspec_core::zbasis::BasisIndex;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240601;

struct Board {
    red: Vec<String>,
}

impl Board {
    fn line(&mut self, id: &str, passed: bool, what: &str, detail: &str) {
        println!("[{}] {id:<6} {what} — {detail}", if passed { "PASS" } else { "FAIL" });
        if !passed {
            self.red.push(id.to_string());
        }
    }

    fn sub(&self, passed: bool, what: &str, detail: &str) {
        println!("        {} {what} — {detail}", if passed { "ok  " } else { "FAIL" });
    }

    fn checks(&mut self, id: &str, what: &str, cs: &[Check]) {
        for c in cs {
            let tag = if c.diagnostic { "diag" } else if c.passed { "ok  " } else { "FAIL" };
            println!("        {tag} {} [{}/{} failed] {}", c.name, c.failures, c.instances, c.detail);
        }
        let ok = cs.iter().all(|c| c.passed || c.diagnostic);
        let n: usize = cs.iter().filter(|c| !c.diagnostic).count();
        self.line(id, ok, what, &format!("{} checks", n));
    }
}

fn rat(n: u32, d: u32) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn run(p: u32, l: u32, d: u32, s: SeriesId, h: u32, mode: Mode, opts: &DensityOpts) -> DensityReport {
    let k = witness(p, l, d, required_window(s, h, p));
    density_sequence(&k, s, h, mode, opts).expect("within budget")
}

fn criterion7(b: &mut Board) {
    let opts = DensityOpts::default();
    let w2: [(u32, u32); 6] = [(0, 1), (1, 0), (1, 1), (2, 1), (2, 2), (2, 3)];
    let w3: [(u32, u32); 2] = [(1, 1), (1, 2)];
    // (p, series, horizon, tolerance, needs monotone gap, modes, witnesses)
    let plan: Vec<(u32, SeriesId, u32, f64, bool, Vec<Mode>, &[(u32, u32)])> = vec![
        (2, SeriesId::L, 60, 0.02, false, vec![Mode::Raw, Mode::Delta], &w2),
        (2, SeriesId::D, 60, 0.02, false, vec![Mode::Raw, Mode::Delta], &w2),
        (2, SeriesId::M, 7, 0.1, true, vec![Mode::Raw, Mode::Delta], &w2),
        (2, SeriesId::P, 7, 0.1, true, vec![Mode::Raw], &w2),
        (2, SeriesId::F, 7, 0.1, true, vec![Mode::Raw, Mode::Delta], &w2),
        (3, SeriesId::L, 60, 0.02, false, vec![Mode::Raw, Mode::Delta], &w3),
        (3, SeriesId::D, 60, 0.02, false, vec![Mode::Raw, Mode::Delta], &w3),
        (3, SeriesId::M, 7, 0.1, true, vec![Mode::Raw, Mode::Delta], &w3),
        (3, SeriesId::I, 4, 0.1, true, vec![Mode::Raw], &w3),
    ];
    let mut all = true;
    for (p, s, h, tol, mono, modes, ws) in plan {
        for mode in modes {
            let mut ok = true;
            let mut parts = Vec::new();
            for &(l, d) in ws {
                let r = run(p, l, d, s, h, mode, &opts);
                let gap = to_f64(&r.abs_gap);
                let m = !mono || r.gap_monotone_last(3);
                ok &= gap <= tol && m;
                parts.push(format!("({l},{d}) {:.4}{}", gap, if m { "" } else { " non-monotone" }));
            }
            all &= ok;
            b.sub(ok, &format!("p={p} {s} {mode} horizon {h}, gap ≤ {tol}{}", if mono { " + monotone" } else { "" }), &parts.join(", "));
        }
    }
    b.line("7", all, "convergence of densities to d²/p^{2l}", "every (p, series, mode) sub-line must pass");
}

fn criterion8(b: &mut Board) {
    let opts = DensityOpts::default();
    let mut ok = true;
    let mut details = Vec::new();
    for (p, lmax, expect) in [
        (2u32, 2u32, vec![rat(0, 1), rat(1, 16), rat(1, 4), rat(9, 16), rat(1, 1)]),
        (3, 1, vec![rat(0, 1), rat(1, 9), rat(4, 9), rat(1, 1)]),
    ] {
        let r = spectrum_scan(p, lmax, SeriesId::M, 7, Mode::Raw, 0.1, &opts).expect("within budget");
        let got: Vec<BigRational> = r.achieved.iter().cloned().collect();
        let this = got == expect && r.entries.iter().all(|e| e.identified.as_ref() == Some(&e.predicted));
        ok &= this;
        let shown: Vec<String> = got.iter().map(|q| q.to_string()).collect();
        b.sub(this, &format!("spectrum_scan({p}, {lmax}) via M horizon 7"), &format!("{{{}}}", shown.join(", ")));
        details.push(format!("p={p}: {} values", got.len()));
    }
    b.line("8", ok, "finitely generated spectrum sets", &details.join("; "));
}

fn random_zwords<R: Rng>(rng: &mut R, p: u32, n: usize) -> Vec<ZWord> {
    (0..n)
        .map(|_| {
            let m = rng.random_range(2..=10u32);
            let nn = rng.random_range(1..m);
            let mut w: ZWord = vec![(BasisIndex::Com(m, nn), 1)];
            if p == 2 && rng.random_bool(0.5) {
                w.push((BasisIndex::CSq(rng.random_range(1..=10)), 1));
            }
            w
        })
        .collect()
}

fn criterion10(b: &mut Board) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let base = DensityOpts::default();
    let mut ok_ins = true;
    let mut ok_coarse = true;
    for (p, s, h, tol, ws) in [
        (2u32, SeriesId::L, 60u32, 0.02, vec![(1u32, 1u32), (2, 2)]),
        (2, SeriesId::D, 60, 0.02, vec![(1, 1), (2, 3)]),
        (2, SeriesId::M, 7, 0.1, vec![(1, 1), (2, 3)]),
        (3, SeriesId::L, 60, 0.02, vec![(1, 1), (1, 2)]),
        // horizon 5: the Z-chains at the horizon-7 window (2189) are too large to run
        (3, SeriesId::M, 5, 0.1, vec![(1, 2)]),
    ] {
        for (l, d) in ws {
            let raw = run(p, l, d, s, h, Mode::Raw, &base);
            let n = rng.random_range(1..=3);
            let opts = DensityOpts { extra_z: random_zwords(&mut rng, p, n), ..DensityOpts::default() };
            let ins = run(p, l, d, s, h, Mode::Raw, &opts);
            let shift = to_f64(&(&ins.tail_estimate - &raw.tail_estimate)).abs();
            let this = shift <= tol;
            ok_ins &= this;
            b.sub(this, &format!("insert {n} Z-generator(s): p={p} {s} ({l},{d})"), &format!("tail shift {shift:.4} (tol {tol})"));
            let delta = run(p, l, d, s, h, Mode::Delta, &base);
            let shift = to_f64(&(&delta.tail_estimate - &raw.tail_estimate)).abs();
            let this = shift <= tol;
            ok_coarse &= this;
            b.sub(this, &format!("raw vs delta: p={p} {s} ({l},{d})"), &format!("tail shift {shift:.4} (tol {tol})"));
        }
    }
    // not gating: the share of one inserted normal closure decays like 1/k
    let k = witness(2, 1, 1, required_window(SeriesId::L, 200, 2));
    let one = DensityOpts { extra_z: vec![vec![(BasisIndex::Com(3, 1), 1)]], ..DensityOpts::default() };
    let mut decay = Vec::new();
    for h in [60u32, 120, 200] {
        let a = density_sequence(&k, SeriesId::L, h, Mode::Raw, &base).expect("within budget");
        let z = density_sequence(&k, SeriesId::L, h, Mode::Raw, &one).expect("within budget");
        decay.push(format!("{h}: {:.4}", to_f64(&(&z.tail_estimate - &a.tail_estimate)).abs()));
    }
    println!("        diag insert z_{{3,1}} into p=2 L (1,1), shift by horizon — {}", decay.join(", "));
    b.line("10", ok_ins && ok_coarse, "stability under Z-generators and block coarsening", &format!("insertion {}, coarsening {}", if ok_ins { "ok" } else { "red" }, if ok_coarse { "ok" } else { "red" }));
}

fn main() {
    let t0 = Instant::now();
    let mut b = Board { red: Vec::new() };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    println!("acceptance run, seed {SEED}");

    b.checks("1", "quotient structure of G_k", &suites::quotient_structure());
    b.checks("2", "γ-formula in window 50", &[suites::gamma_formula(50, 40)]);
    b.checks("3", "identity suites", &suites::identities(suites::DEFAULT_SAMPLES, &mut rng));
    let mut c4 = Vec::new();
    for k in 1..=4 {
        c4.extend(suites::lower_bound_p(k, suites::DEFAULT_SAMPLES, &mut rng));
    }
    c4.push(suites::q_k_diagnostic());
    b.checks("4", "G^{2^k} ∩ Z = L_kQ_k, k ≤ 4", &c4);
    b.checks("5", "Frattini ranks and explicit Φ_k", &suites::frattini());
    let c6: Vec<Check> = [(2, 2), (2, 3), (3, 1), (3, 2)]
        .into_iter()
        .map(|(p, k)| suites::embedding_multiplicative(p, k, 10_000, &mut rng))
        .collect();
    b.checks("6", "embedding into G_k is multiplicative", &c6);
    criterion7(&mut b);
    criterion8(&mut b);
    let c9: Vec<Check> = suites::appendix().into_iter().filter(|c| !c.name.starts_with("binom")).collect();
    b.checks("9", "appendix lemma and grid partition", &c9);
    criterion10(&mut b);

    println!("acceptance: {} red criteria {:?}, {:.1?}", b.red.len(), b.red, t0.elapsed());
    let strict = std::env::var("HSPEC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && !b.red.is_empty() {
        std::process::exit(1);
    }
}
