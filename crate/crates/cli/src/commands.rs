use hspec_core::filtser::{series_level, FiltError, SeriesId};
use hspec_core::gfin::{FinGroup, GfinError};
use hspec_core::hdim::{
    density_sequence, normalize, required_window, spectrum_scan, DensityOpts, HdimError, Mode, NormalizeOpts,
};
use hspec_core::suites::{run_suite, Suite};
use hspec_core::{Fp, QuotCtx};
use serde::Serialize;
use serde_json::{json, Value};

use crate::report;
use crate::word::{eval, parse_word_list, ParseError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse generators: {0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<FiltError> for CliError {
    fn from(e: FiltError) -> Self {
        match e {
            FiltError::Budget { .. } | FiltError::WindowTooSmall { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<HdimError> for CliError {
    fn from(e: HdimError) -> Self {
        match e {
            HdimError::Filt(f) => f.into(),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<GfinError> for CliError {
    fn from(e: GfinError) -> Self {
        match e {
            GfinError::TooLarge { .. } => CliError::Budget(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub window_budget: u32,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub enum Command {
    QuotientInfo { p: u32, k: u32 },
    Series { p: u32, series: Vec<SeriesId>, max_level: u32 },
    Hdim { p: u32, series: Vec<SeriesId>, gens: String, horizon: u32, mode: Mode, tolerance: Option<f64> },
    Spectrum { p: u32, lmax: u32, series: SeriesId, horizon: u32, mode: Mode, tolerance: f64 },
    Verify { suite: Suite, samples: usize },
}

/// What a command produced. `failed` marks a verification failure; the
/// report is still emitted.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub json: Option<Value>,
    pub csv: Option<String>,
    pub failed: bool,
}

fn field(p: u32) -> Result<Fp, CliError> {
    Fp::new(p).map_err(|e| CliError::Usage(format!("--p {p}: {e}")))
}

fn names(series: &[SeriesId]) -> Vec<&'static str> {
    series.iter().map(|s| s.name()).collect()
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        Command::QuotientInfo { p, k } => quotient_info(*p, *k, cfg),
        Command::Series { p, series, max_level } => series_table(*p, series, *max_level, cfg),
        Command::Hdim { p, series, gens, horizon, mode, tolerance } => {
            hdim(*p, series, gens, *horizon, *mode, *tolerance, cfg)
        }
        Command::Spectrum { p, lmax, series, horizon, mode, tolerance } => {
            spectrum(*p, *lmax, *series, *horizon, *mode, *tolerance, cfg)
        }
        Command::Verify { suite, samples } => verify(*suite, *samples, cfg),
    }
}

fn quotient_info(p: u32, k: u32, cfg: &RunConfig) -> Result<Output, CliError> {
    if k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let g = FinGroup::new(field(p)?, k)?;
    let logs = |v: Vec<hspec_core::gfin::FinSubgroup>| -> Vec<usize> { v.iter().map(|s| s.log_order(&g)).collect() };
    let lcs = logs(g.lower_central_series());
    let lps = logs(g.lower_p_series());
    let dims = logs(g.dimension_series());
    let result = json!({
        "p": p,
        "k": k,
        "log_order": g.log_order(),
        "z_rank": g.zdim(),
        "class": lcs.len() - 1,
        "lower_central_series": lcs,
        "lower_p_series_length": lps.len() - 1,
        "lower_p_series": lps,
        "dimension_series_length": dims.len() - 1,
        "dimension_series": dims,
    });
    let config = json!({ "p": p, "k": k, "run": cfg });
    Ok(Output { json: Some(report::envelope("quotient-info", config, result)), ..Output::default() })
}

fn series_table(p: u32, series: &[SeriesId], max_level: u32, cfg: &RunConfig) -> Result<Output, CliError> {
    field(p)?;
    let mut rows = Vec::new();
    let mut levels = Vec::new();
    for &s in series {
        for k in 1..=max_level {
            let lvl = series_level(s, k, p, None, cfg.window_budget)?;
            let m = lvl.markers;
            let codim = lvl.codim();
            rows.push(vec![
                s.name().to_string(),
                k.to_string(),
                lvl.window.to_string(),
                codim.to_string(),
                m.n_k.to_string(),
                m.n_h.to_string(),
                m.n_z.to_string(),
                m.alpha_k.to_string(),
                m.m_k.map(|v| v.to_string()).unwrap_or_default(),
            ]);
            levels.push(json!({
                "series": s.name(),
                "k": k,
                "window": lvl.window,
                "codim": codim,
                "n_k": m.n_k,
                "n_h": m.n_h,
                "n_z": m.n_z,
                "alpha_k": m.alpha_k,
                "m_k": m.m_k,
                "notes": lvl.notes,
            }));
        }
    }
    let config = json!({ "p": p, "series": names(series), "max_level": max_level, "run": cfg });
    Ok(Output {
        json: Some(report::envelope("series", config, json!({ "levels": levels }))),
        csv: Some(report::csv_string(&report::SERIES_CSV_HEADER, &rows)),
        failed: false,
    })
}

fn hdim(
    p: u32,
    series: &[SeriesId],
    gens: &str,
    horizon: u32,
    mode: Mode,
    tolerance: Option<f64>,
    cfg: &RunConfig,
) -> Result<Output, CliError> {
    let f = field(p)?;
    let words = parse_word_list(gens)?;
    if horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let opts = DensityOpts { budget: cfg.window_budget, ..DensityOpts::default() };
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &s in series {
        let w = required_window(s, horizon, p);
        if w > cfg.window_budget {
            return Err(FiltError::Budget { needed: w, budget: cfg.window_budget }.into());
        }
        let qc = QuotCtx::new(f, w);
        let elems: Vec<_> = words.iter().map(|wd| eval(&qc, wd)).collect();
        let k = normalize(&qc, &elems, NormalizeOpts::default());
        let rep = density_sequence(&k, s, horizon, mode, &opts)?;
        rows.extend(report::density_csv_rows(&rep));
        let mut v = report::density_json(&rep);
        v["normal_form"] = json!({
            "window": k.window,
            "finite": k.finite,
            "l": k.l,
            "xexp": k.xexp,
            "depths": k.depths,
            "dropped": k.dropped.len(),
        });
        if let Some(t) = tolerance {
            v["tolerance"] = json!(t);
            v["within_tolerance"] = json!(hspec_core::hdim::to_f64(&rep.abs_gap) <= t);
        }
        reports.push(v);
    }
    let config = json!({
        "p": p,
        "series": names(series),
        "gens": words.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
        "horizon": horizon,
        "mode": mode.to_string(),
        "tolerance": tolerance,
        "run": cfg,
    });
    Ok(Output {
        json: Some(report::envelope("hdim", config, json!({ "reports": reports }))),
        csv: Some(report::csv_string(&report::DENSITY_CSV_HEADER, &rows)),
        failed: false,
    })
}

fn spectrum(
    p: u32,
    lmax: u32,
    series: SeriesId,
    horizon: u32,
    mode: Mode,
    tolerance: f64,
    cfg: &RunConfig,
) -> Result<Output, CliError> {
    field(p)?;
    if horizon == 0 {
        return Err(CliError::Usage("--horizon must be at least 1".into()));
    }
    let w = required_window(series, horizon, p);
    if w > cfg.window_budget {
        return Err(FiltError::Budget { needed: w, budget: cfg.window_budget }.into());
    }
    let opts = DensityOpts { budget: cfg.window_budget, ..DensityOpts::default() };
    let r = spectrum_scan(p, lmax, series, horizon, mode, tolerance, &opts)?;
    let config = json!({
        "p": p,
        "lmax": lmax,
        "series": series.name(),
        "horizon": horizon,
        "mode": mode.to_string(),
        "tolerance": tolerance,
        "run": cfg,
    });
    Ok(Output { json: Some(report::envelope("spectrum", config, report::spectrum_json(&r))), ..Output::default() })
}

fn verify(suite: Suite, samples: usize, cfg: &RunConfig) -> Result<Output, CliError> {
    let r = run_suite(suite, cfg.seed, samples);
    let config = json!({ "suite": suite.name(), "samples": samples, "run": cfg });
    Ok(Output {
        json: Some(report::envelope("verify", config, report::suite_json(&r))),
        csv: None,
        failed: !r.passed(),
    })
}
