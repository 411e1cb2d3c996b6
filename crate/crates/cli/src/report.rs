//! JSON and CSV rendering. Rationals are exact `{num, den}` strings plus a
//! decimal for reading; nothing downstream should compare the decimal.

use hspec_core::hdim::{to_f64, DensityReport, SpectrumReport};
use hspec_core::suites::SuiteReport;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: &str = "hspec.v1";

pub const DENSITY_CSV_HEADER: [&str; 8] =
    ["series", "k", "window", "numerator", "denominator", "ratio_num", "ratio_den", "ratio_dec"];

pub const SERIES_CSV_HEADER: [&str; 9] = ["series", "k", "window", "codim", "n_k", "n_h", "n_z", "alpha_k", "m_k"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rational {
    pub num: String,
    pub den: String,
    pub dec: f64,
}

impl From<&BigRational> for Rational {
    fn from(r: &BigRational) -> Self {
        Rational { num: r.numer().to_string(), den: r.denom().to_string(), dec: to_f64(r) }
    }
}

fn rat(r: &BigRational) -> Value {
    serde_json::to_value(Rational::from(r)).expect("plain struct")
}

pub fn envelope(command: &str, config: Value, result: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "result": result,
    })
}

pub fn density_json(r: &DensityReport) -> Value {
    let points: Vec<Value> = r
        .points
        .iter()
        .map(|pt| {
            let mut v = json!({
                "k": pt.k,
                "window": pt.window,
                "numerator": pt.numerator,
                "denominator": pt.denominator,
                "ratio": rat(&pt.ratio),
            });
            if let Some((lo, hi)) = &pt.sandwich {
                v["sandwich"] = json!({ "lower": rat(lo), "upper": rat(hi) });
            }
            v
        })
        .collect();
    json!({
        "series": r.series.name(),
        "p": r.p,
        "mode": r.mode.to_string(),
        "l": r.l,
        "d": r.d,
        "predicted": rat(&r.predicted),
        "tail_estimate": rat(&r.tail_estimate),
        "tail_min": rat(&r.tail_min),
        "tail_max": rat(&r.tail_max),
        "abs_gap": rat(&r.abs_gap),
        "points": points,
        "notes": r.notes,
    })
}

pub fn density_csv_rows(r: &DensityReport) -> Vec<Vec<String>> {
    r.points
        .iter()
        .map(|pt| {
            vec![
                r.series.name().to_string(),
                pt.k.to_string(),
                pt.window.to_string(),
                pt.numerator.to_string(),
                pt.denominator.to_string(),
                pt.ratio.numer().to_string(),
                pt.ratio.denom().to_string(),
                format!("{:.6}", to_f64(&pt.ratio)),
            ]
        })
        .collect()
}

pub fn spectrum_json(r: &SpectrumReport) -> Value {
    let entries: Vec<Value> = r
        .entries
        .iter()
        .map(|e| {
            json!({
                "l": e.l,
                "d": e.d,
                "witness": witness_text(r.p, e.l, e.d),
                "predicted": rat(&e.predicted),
                "tail": rat(&e.tail),
                "identified": e.identified.as_ref().map(rat),
            })
        })
        .collect();
    json!({
        "p": r.p,
        "l_max": r.l_max,
        "series": r.series.name(),
        "horizon": r.horizon,
        "mode": r.mode.to_string(),
        "tolerance": r.tolerance,
        "achieved": r.achieved.iter().map(rat).collect::<Vec<_>>(),
        "witnesses": entries,
    })
}

/// The witness generators as a `--gens` string.
pub fn witness_text(p: u32, l: u32, d: u32) -> String {
    let mut parts = vec![format!("x^{}", p.pow(l))];
    parts.extend((1..=d).map(|i| format!("c{i}")));
    parts.join("; ")
}

pub fn suite_json(r: &SuiteReport) -> Value {
    let checks: Vec<Value> = r
        .checks
        .iter()
        .map(|c| {
            json!({
                "name": c.name,
                "passed": c.passed,
                "diagnostic": c.diagnostic,
                "instances": c.instances,
                "failures": c.failures,
                "detail": c.detail,
            })
        })
        .collect();
    json!({
        "suite": r.suite.name(),
        "seed": r.seed,
        "passed": r.passed(),
        "checks": checks,
    })
}

pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}
