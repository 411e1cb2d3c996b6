use std::process::{Command, Output};

use serde_json::Value;

fn hspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hspec"))
        .args(args)
        .env_remove("HSPEC_WINDOW_BUDGET")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("one JSON document")
}

fn dec(v: &Value) -> f64 {
    v["dec"].as_f64().unwrap()
}

#[test]
fn quotient_info_p2_k2() {
    let v = json(&hspec(&["quotient-info", "--p", "2", "--k", "2"]));
    assert_eq!(v["schema_version"], "hspec.v1");
    assert_eq!(v["result"]["log_order"], 16);
    assert_eq!(v["result"]["class"], 7);
    assert_eq!(v["result"]["lower_p_series_length"], 7);
    assert_eq!(v["result"]["dimension_series_length"], 8);
}

#[test]
fn hdim_lower_p_series_x2_y() {
    let v = json(&hspec(&["hdim", "--p", "2", "--series", "L", "--gens", "x^2; y", "--horizon", "60", "--mode", "delta"]));
    let r = &v["result"]["reports"][0];
    assert_eq!(r["predicted"]["num"], "1");
    assert_eq!(r["predicted"]["den"], "4");
    assert!(dec(&r["abs_gap"]) <= 0.02, "gap {}", r["abs_gap"]);
    // level 1 has S_1 ∩ Z = Z and contributes no point
    let pts = r["points"].as_array().unwrap();
    assert_eq!(pts.len(), 59);
    assert_eq!(pts.last().unwrap()["k"], 60);
    assert_eq!(v["config"]["gens"][0], "x^2");
}

#[test]
fn hdim_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("points.csv");
    let out = dir.path().join("report.json");
    let o = hspec(&[
        "hdim", "--p", "2", "--series", "M,D", "--gens", "x^2; y", "--horizon", "4",
        "--csv", csv.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "series,k,window,numerator,denominator,ratio_num,ratio_den,ratio_dec");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() >= 6 && rows.len() <= 8);
    assert!(rows.iter().any(|r| r[0] == "M") && rows.iter().any(|r| r[0] == "D"));
    for r in &rows {
        let (n, d): (u64, u64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        let (a, b): (u64, u64) = (r[5].parse().unwrap(), r[6].parse().unwrap());
        assert_eq!(n * b, a * d);
    }
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["reports"].as_array().unwrap().len(), 2);
}

#[test]
fn spectrum_p3() {
    let v = json(&hspec(&["spectrum", "--p", "3", "--lmax", "1"]));
    let got: Vec<(String, String)> = v["result"]["achieved"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| (q["num"].as_str().unwrap().to_string(), q["den"].as_str().unwrap().to_string()))
        .collect();
    let want = [("0", "1"), ("1", "9"), ("4", "9"), ("1", "1")];
    assert_eq!(got, want.map(|(a, b)| (a.to_string(), b.to_string())));
}

#[test]
fn series_csv_to_stdout() {
    let o = hspec(&["series", "--p", "2", "--series", "L", "--max-level", "3"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "series,k,window,codim,n_k,n_h,n_z,alpha_k,m_k");
    assert_eq!(lines.len(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(hspec(&["quotient-info", "--p", "2"]).status.code(), Some(1));
    assert_eq!(hspec(&["quotient-info", "--p", "4", "--k", "1"]).status.code(), Some(1));
    assert_eq!(hspec(&["--help"]).status.code(), Some(0));
    let o = hspec(&["hdim", "--p", "2", "--series", "L", "--gens", "x^2; z(2,2)", "--horizon", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("byte 7"));
    let o = hspec(&["--window-budget", "50", "hdim", "--p", "2", "--series", "L", "--gens", "y", "--horizon", "60"]);
    assert_eq!(o.status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_hspec"))
        .args(["spectrum", "--p", "2", "--lmax", "1"])
        .env("HSPEC_WINDOW_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn verify_appendix_passes() {
    let v = json(&hspec(&["verify", "--suite", "appendix"]));
    assert_eq!(v["result"]["passed"], true);
}

#[test]
fn unsupported_mode_is_usage_error() {
    let o = hspec(&["hdim", "--p", "3", "--series", "P", "--gens", "x; y", "--horizon", "2", "--mode", "delta"]);
    assert_eq!(o.status.code(), Some(1));
}
