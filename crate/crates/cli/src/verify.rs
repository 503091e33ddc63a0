//! The `verify` command: run suites and assemble the JSON report.

use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};

use qkzr::suites::{run_suites, CheckRecord, InputValue, Verdict};

use crate::config::{Cx, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Truncation {
    pub calls: usize,
    pub max_terms_used: usize,
    pub max_est_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub suite: String,
    pub name: String,
    pub anchor: String,
    pub n: usize,
    pub inputs: Map<String, Value>,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: String,
    pub required: bool,
    pub samples: usize,
    pub worst_sample: Option<usize>,
    pub rejected_draws: usize,
    pub error: Option<String>,
    pub truncation: Truncation,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub informational: usize,
    pub errors: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub config: RunConfig,
    pub platform: Value,
    pub checks: Vec<CheckEntry>,
    pub summary: Summary,
    pub verdict: String,
    pub wall_clock_seconds: f64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.summary.failed == 0 && self.summary.errors == 0
    }
}

fn input_json(v: &InputValue) -> Value {
    match v {
        InputValue::Int(i) => json!(i),
        InputValue::Real(x) => json!(x),
        InputValue::Complex(z) => json!(Cx::from(*z)),
        InputValue::Vector(zs) => Value::Array(zs.iter().map(|z| json!(Cx::from(*z))).collect()),
    }
}

fn entry(r: &CheckRecord) -> CheckEntry {
    CheckEntry {
        suite: r.suite.name().into(),
        name: r.name.into(),
        anchor: r.anchor.into(),
        n: r.n,
        inputs: r.inputs.iter().map(|(k, v)| (k.clone(), input_json(v))).collect(),
        residual: r.residual,
        tolerance: r.tolerance,
        verdict: r.verdict.name().into(),
        required: r.verdict != Verdict::Info,
        samples: r.samples,
        worst_sample: r.worst_sample,
        rejected_draws: r.rejected,
        error: r.error.clone(),
        truncation: Truncation {
            calls: r.truncation.calls,
            max_terms_used: r.truncation.max_terms_used,
            max_est_error: r.truncation.max_est_error,
        },
    }
}

pub fn verify(config: &RunConfig) -> Result<VerificationReport, CliError> {
    let start = Instant::now();
    let cfg = config.suite_config()?;
    let suites = config.suites()?;
    let records = run_suites(&suites, &cfg);
    let mut summary = Summary::default();
    for r in &records {
        summary.total += 1;
        match r.verdict {
            Verdict::Pass => summary.passed += 1,
            Verdict::Fail => summary.failed += 1,
            Verdict::Info => summary.informational += 1,
        }
        if r.error.is_some() {
            summary.errors += 1;
        }
    }
    let verdict = if summary.failed == 0 && summary.errors == 0 { "pass" } else { "fail" };
    Ok(VerificationReport {
        config: config.clone(),
        platform: json!({
            "arch": std::env::consts::ARCH,
            "os": std::env::consts::OS,
            "arithmetic": "IEEE 754 binary64; residuals are bit-stable for a fixed build and platform",
        }),
        checks: records.iter().map(entry).collect(),
        summary,
        verdict: verdict.into(),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    })
}
