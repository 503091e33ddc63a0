use std::io::Write;

use serde_json::Value;

use qkzr_cli::{run_args, EXIT_ERROR, EXIT_FAIL, EXIT_OK};

struct Run {
    code: u8,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_args(std::iter::once("qkzr").chain(args.iter().copied()), &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

fn residuals(report: &Value) -> Vec<(String, f64)> {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap().to_string(), c["residual"].as_f64().unwrap_or(f64::NAN)))
        .collect()
}

#[test]
fn verify_all_suites_at_rank_one_passes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let r = run(&["verify", "--n", "1", "--seed", "42", "--suites", "all", "--out", path.to_str().unwrap()]);
    let report = json(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(r.code, EXIT_OK, "{report:#}");
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["summary"]["failed"], 0);
    assert!(report["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(report["config"]["q"], serde_json::json!([0.6, 0.0]));
    for c in report["checks"].as_array().unwrap() {
        for key in ["name", "anchor", "inputs", "residual", "tolerance", "verdict", "truncation"] {
            assert!(c.get(key).is_some(), "{key} missing in {c}");
        }
        assert!(!c["anchor"].as_str().unwrap().is_empty());
    }
    let suites: std::collections::BTreeSet<_> =
        report["checks"].as_array().unwrap().iter().map(|c| c["suite"].as_str().unwrap()).collect();
    assert_eq!(suites.len(), 7);
}

#[test]
fn q_outside_the_unit_disc_is_a_region_violation() {
    let r = run(&["verify", "--q", "1.5", "--suites", "trig"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert_eq!(json(&r.stderr)["error"]["kind"], "RegionViolation");
    assert!(r.stdout.is_empty());
}

#[test]
fn suite_filter_keeps_only_selected_suites() {
    let r = run(&["verify", "--suites", "specfun", "--samples", "3"]);
    assert_eq!(r.code, EXIT_OK);
    let report = json(&r.stdout);
    let checks = report["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["suite"] == "specfun"));
    let r = run(&["verify", "--suites", "trig,fusion", "--samples", "2"]);
    let report = json(&r.stdout);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["suite"] == "trig" || c["suite"] == "fusion"));
}

#[test]
fn identical_configs_give_identical_residuals() {
    let args = ["verify", "--n", "2", "--suites", "exchange,dqybe", "--samples", "4", "--seed", "7"];
    let a = json(&run(&args).stdout);
    let b = json(&run(&args).stdout);
    assert_eq!(residuals(&a), residuals(&b));
    assert_eq!(a["checks"], b["checks"]);
    let c = json(&run(&["verify", "--n", "2", "--suites", "exchange,dqybe", "--samples", "4", "--seed", "8"]).stdout);
    assert_ne!(a["checks"], c["checks"]);
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    write!(f, r#"{{"n": 1, "q": [0.5, 0.05], "samples": 2, "suites": ["trig"], "seed": 3}}"#).unwrap();
    let r = run(&["verify", "--config", f.path().to_str().unwrap(), "--samples", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let report = json(&r.stdout);
    assert_eq!(report["config"]["q"], serde_json::json!([0.5, 0.05]));
    assert_eq!(report["config"]["samples"], 3);
    assert_eq!(report["config"]["n"], 1);
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["samples"] == 3 && c["n"] == 1));

    let mut bad = tempfile::NamedTempFile::new().unwrap();
    write!(bad, r#"{{"n": 1, "colour": "blue"}}"#).unwrap();
    let r = run(&["verify", "--config", bad.path().to_str().unwrap()]);
    assert_eq!(r.code, EXIT_ERROR);
    assert_eq!(json(&r.stderr)["error"]["kind"], "ConfigInvalid");
}

#[test]
fn failing_check_gives_failure_status() {
    let r = run(&["verify", "--suites", "dqybe", "--samples", "2", "--tol", "1e-30"]);
    assert_eq!(r.code, EXIT_FAIL);
    let report = json(&r.stdout);
    assert_eq!(report["verdict"], "fail");
    assert!(report["summary"]["failed"].as_u64().unwrap() > 0);
}

#[test]
fn unknown_suite_is_a_config_error() {
    let r = run(&["verify", "--suites", "galaxy"]);
    assert_eq!(r.code, EXIT_ERROR);
    assert_eq!(json(&r.stderr)["error"]["kind"], "ConfigInvalid");
}

#[test]
fn eval_felder_prints_a_matrix() {
    let r = run(&["eval", "--target", "felder", "--u", "0.13+0.02i", "--lambda", "random"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let v = json(&r.stdout);
    let m = v["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 9);
    assert_eq!(m[0][0], serde_json::json!([1.0, 0.0]));
    assert!(v["basis"].as_str().unwrap().contains("i*(n+1)+j"));
}

#[test]
fn eval_trig_at_one_is_the_flip() {
    let v = json(&run(&["eval", "--target", "trig", "--n", "1", "--z", "1"]).stdout);
    let m = v["matrix"].as_array().unwrap();
    let flip = [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]];
    for i in 0..4 {
        for j in 0..4 {
            let re = m[i][j][0].as_f64().unwrap();
            let im = m[i][j][1].as_f64().unwrap();
            assert!((re - flip[i][j] as f64).abs() < 1e-15 && im.abs() < 1e-15);
        }
    }
}

#[test]
fn eval_chi_reports_both_routes() {
    let v = json(&run(&["eval", "--target", "chi", "--u", "0.11-0.03i"]).stdout);
    assert!(v["difference"].as_f64().unwrap() < 1e-8);
    assert!(v["via_products"]["value"].is_array());
    assert!(v["via_egamma"]["value"].is_array());
}

#[test]
fn eval_felder_at_a_theta_zero_is_a_pole_record() {
    let gamma = 0.6f64.ln() / std::f64::consts::PI;
    let u = format!("{}i", -gamma);
    let r = run(&["eval", "--target", "felder", "--u", &u]);
    assert_eq!(r.code, EXIT_ERROR);
    let e = json(&r.stderr);
    assert_eq!(e["error"]["kind"], "PoleHit");
    assert!(e["error"]["magnitude"].as_f64().unwrap() < 1e-9);
}

#[test]
fn eval_special_functions() {
    let v = json(&run(&["eval", "--target", "theta1", "--u", "0.2", "--tau", "0.9i"]).stdout);
    assert!(v["value"]["value"][0].as_f64().unwrap() > 0.0);
    let v = json(&run(&["eval", "--target", "2phi1", "--r", "0.3", "--s", "0.2", "--t", "0.7", "--z", "0.1"]).stdout);
    assert!(v["value"]["terms_used"].as_u64().unwrap() > 0);
    let r = run(&["eval", "--target", "2phi1", "--z", "0.1"]);
    assert_eq!(r.code, EXIT_ERROR);
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let header = rd.headers().unwrap().iter().map(String::from).collect();
    let rows = rd.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn scan_of_beta_entry_gives_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let r = run(&[
        "scan",
        "--target",
        "exchange",
        "--entry",
        "m=0,l=1,kind=beta",
        "--u-grid",
        "-0.5:0.5:200",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let (header, rows) = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(header, ["index", "re_u", "im_u", "re_beta_ml", "im_beta_ml", "status", "detail"]);
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r[5] == "ok"));
}

#[test]
fn empty_grid_gives_header_only() {
    let r = run(&["scan", "--target", "exchange", "--entry", "m=0,l=1", "--u-grid", "0:1:0"]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.stdout.lines().count(), 1);
    assert!(r.stdout.starts_with("index,re_u,im_u,re_alpha_ml"));
}

#[test]
fn grid_through_u_equal_gamma_flags_pole_rows() {
    let gamma = -0.6f64.ln() / std::f64::consts::PI;
    let grid = format!("{}i:{}i:3", 0.5 * gamma, 1.5 * gamma);
    for target in ["felder", "exchange"] {
        let r = run(&["scan", "--target", target, "--entry", "m=1,l=0,kind=all", "--u-grid", &grid, "--residuals"]
            .into_iter()
            .filter(|a| target == "exchange" || *a != "--residuals")
            .collect::<Vec<_>>());
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
        let (header, rows) = csv_rows(&r.stdout);
        assert_eq!(rows.len(), 3);
        let status = header.iter().position(|h| h == "status").unwrap();
        assert_eq!(rows[1][status], "pole", "{target}");
        assert!(rows[1][3..status].iter().all(String::is_empty));
        assert_eq!(rows[0][status], "ok");
        if target == "exchange" {
            let res = header.iter().position(|h| h == "residual").unwrap();
            assert!(rows[0][res].parse::<f64>().unwrap() < 1e-8);
        }
    }
}

#[test]
fn scan_rejects_bad_requests() {
    let r = run(&["scan", "--target", "exchange", "--u-grid", "0:1:3"]);
    assert_eq!(r.code, EXIT_ERROR);
    let r = run(&["scan", "--target", "exchange", "--entry", "m=0,l=5", "--u-grid", "0:1:3"]);
    assert_eq!(r.code, EXIT_ERROR);
    let r = run(&["scan", "--target", "felder", "--entry", "m=0,l=1", "--u-grid", "0:1"]);
    assert_eq!(r.code, EXIT_ERROR);
}

#[test]
fn scan_over_z_for_the_trigonometric_matrix() {
    let r = run(&["scan", "--target", "trig", "--entry", "m=0,l=1,kind=alpha", "--z-grid", "0.5:2:4"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let (header, rows) = csv_rows(&r.stdout);
    assert_eq!(header[1], "re_z");
    assert_eq!(rows.len(), 4);
}
