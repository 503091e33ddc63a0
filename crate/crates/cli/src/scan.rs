//! The `scan` command: a target along a grid, written as CSV.

use std::io::Write;

use qkzr::linalg::OperatorVV;
use qkzr::C;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::parse::{EntryKind, EntrySpec};
use crate::target::{evaluate, Model, Point, Target, Value};

/// Which variable the grid runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridVar {
    U,
    Z,
}

pub struct ScanRequest {
    pub target: Target,
    pub entry: Option<EntrySpec>,
    pub var: GridVar,
    pub grid: Vec<C>,
    /// Fixed point arguments other than the grid variable.
    pub point: Point,
    /// Add the available consistency residual as a column.
    pub residuals: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanSummary {
    pub rows: usize,
    pub poles: usize,
    pub errors: usize,
}

fn columns(req: &ScanRequest) -> Result<Vec<String>, CliError> {
    if req.target.is_matrix() {
        let e = req
            .entry
            .ok_or_else(|| CliError::ConfigInvalid(format!("scanning {} needs --entry", req.target)))?;
        Ok(match e.kind {
            EntryKind::Alpha => vec!["alpha_ml".into()],
            EntryKind::Beta => vec!["beta_ml".into()],
            EntryKind::All => ["alpha_ml", "alpha_lm", "beta_ml", "beta_lm"].map(String::from).to_vec(),
        })
    } else if req.target == Target::Chi {
        Ok(vec!["chi_products".into(), "chi_egamma".into()])
    } else {
        Ok(vec!["value".into()])
    }
}

fn pick(op: &OperatorVV, e: &EntrySpec) -> Vec<C> {
    let (m, l) = (e.m, e.l);
    let alpha_ml = op.get((m, l), (m, l));
    let beta_ml = op.get((l, m), (m, l));
    match e.kind {
        EntryKind::Alpha => vec![alpha_ml],
        EntryKind::Beta => vec![beta_ml],
        EntryKind::All => vec![alpha_ml, op.get((l, m), (l, m)), beta_ml, op.get((m, l), (l, m))],
    }
}

fn residual_for(req: &ScanRequest, value: &Value, point: &Point, model: &Model) -> Result<f64, qkzr::Error> {
    match (req.target, value) {
        (Target::Exchange, Value::Matrix(a)) => {
            let u = point.u.unwrap_or_default();
            let b = qkzr::exchange::exchange_rmatrix_monodromy(u, model.lambda, model.params, model.policy)?;
            Ok(qkzr::linalg::scaled_residual(a.matrix(), b.matrix()))
        }
        (Target::Chi, Value::Chi { difference, .. }) => Ok(*difference),
        _ => unreachable!("residual column checked up front"),
    }
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

pub fn scan<W: Write>(config: &RunConfig, req: &ScanRequest, out: W) -> Result<ScanSummary, CliError> {
    let params = config.params()?;
    let policy = config.policy.policy()?;
    let lambda = config.weight()?;
    if req.var == GridVar::Z && !matches!(req.target, Target::Trig | Target::Theta | Target::Hyper2phi1) {
        return Err(CliError::ConfigInvalid(format!("target {} is scanned over u, not z", req.target)));
    }
    if req.residuals && !matches!(req.target, Target::Exchange | Target::Chi) {
        return Err(CliError::ConfigInvalid(format!("target {} has no residual column", req.target)));
    }
    if let Some(e) = req.entry {
        if e.m.max(e.l) > params.n() {
            return Err(CliError::ConfigInvalid(format!("entry index out of range for rank {}", params.n())));
        }
    }
    let cols = columns(req)?;
    let var = match req.var {
        GridVar::U => "u",
        GridVar::Z => "z",
    };
    let mut header = vec!["index".to_string(), format!("re_{var}"), format!("im_{var}")];
    for c in &cols {
        header.push(format!("re_{c}"));
        header.push(format!("im_{c}"));
    }
    if req.residuals {
        header.push("residual".into());
    }
    header.extend(["status".into(), "detail".into()]);

    let io = |e: csv::Error| CliError::Io { path: "scan output".into(), source: e.into() };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header).map_err(io)?;
    let model = Model { params: &params, lambda: &lambda, policy: &policy };
    let mut summary = ScanSummary::default();
    for (i, &x) in req.grid.iter().enumerate() {
        let mut point = req.point;
        match req.var {
            GridVar::U => point.u = Some(x),
            GridVar::Z => point.z = Some(x),
        }
        let mut row = vec![i.to_string(), fmt(x.re), fmt(x.im)];
        let result = evaluate(req.target, &point, &model).and_then(|v| {
            let values = match (&v, req.entry) {
                (Value::Matrix(op), Some(e)) => pick(op, &e),
                (Value::Scalar(s), _) => vec![s.value],
                (Value::Chi { via_products, via_egamma, .. }, _) => vec![via_products.value, via_egamma.value],
                (Value::Matrix(_), None) => unreachable!("entry checked up front"),
            };
            let res = if req.residuals {
                Some(residual_for(req, &v, &point, &model).map_err(CliError::from)?)
            } else {
                None
            };
            Ok((values, res))
        });
        let blanks = 2 * cols.len() + req.residuals as usize;
        match result {
            Ok((values, res)) => {
                for z in values {
                    row.push(fmt(z.re));
                    row.push(fmt(z.im));
                }
                if let Some(r) = res {
                    row.push(fmt(r));
                }
                row.extend(["ok".into(), String::new()]);
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), blanks));
                let status = match &e {
                    CliError::Model(qkzr::Error::PoleHit { .. }) => {
                        summary.poles += 1;
                        "pole"
                    }
                    _ => {
                        summary.errors += 1;
                        "error"
                    }
                };
                row.extend([status.into(), e.to_string()]);
            }
        }
        w.write_record(&row).map_err(io)?;
        summary.rows += 1;
    }
    w.flush().map_err(|source| CliError::Io { path: "scan output".into(), source })?;
    Ok(summary)
}
