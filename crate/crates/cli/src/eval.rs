//! The `eval` command: one target at one point, printed as JSON.

use serde_json::{json, Value as Json};

use qkzr::specfun::{track, SpecialValue};

use crate::config::{Cx, RunConfig};
use crate::error::CliError;
use crate::target::{evaluate, Model, Point, Target, Value, BASIS_NOTE};

fn cx(z: qkzr::C) -> Json {
    json!(Cx::from(z))
}

fn special(v: &SpecialValue) -> Json {
    json!({ "value": cx(v.value), "est_error": v.est_error, "terms_used": v.terms_used })
}

fn point_json(p: &Point) -> Json {
    let mut m = serde_json::Map::new();
    for (k, v) in [
        ("u", p.u),
        ("z", p.z),
        ("tau", p.tau),
        ("r", p.r),
        ("s", p.s),
        ("t", p.t),
        ("zeta", p.zeta),
        ("sigma", p.sigma),
    ] {
        if let Some(v) = v {
            m.insert(k.into(), cx(v));
        }
    }
    Json::Object(m)
}

pub fn eval(config: &RunConfig, target: Target, point: &Point) -> Result<Json, CliError> {
    let params = config.params()?;
    let policy = config.policy.policy()?;
    let lambda = config.weight()?;
    let model = Model { params: &params, lambda: &lambda, policy: &policy };
    let (value, stats) = track(|| evaluate(target, point, &model));
    let mut out = json!({
        "target": target.name(),
        "n": params.n(),
        "q": cx(params.q()),
        "kappa": cx(params.kappa()),
        "p": cx(params.p()),
        "tau": cx(params.tau()),
        "gamma": cx(params.gamma()),
        "lambda": lambda.coords().iter().map(|&z| cx(z)).collect::<Vec<_>>(),
        "point": point_json(point),
        "truncation": {
            "calls": stats.calls,
            "max_terms_used": stats.max_terms_used,
            "max_est_error": stats.max_est_error,
        },
    });
    match value? {
        Value::Matrix(op) => {
            out["basis"] = json!(BASIS_NOTE);
            out["matrix"] = json!(op
                .matrix()
                .rows()
                .iter()
                .map(|row| row.iter().map(|&z| cx(z)).collect::<Vec<_>>())
                .collect::<Vec<_>>());
        }
        Value::Scalar(v) => out["value"] = special(&v),
        Value::Chi { via_products, via_egamma, via_lattice, difference } => {
            out["via_products"] = special(&via_products);
            out["via_egamma"] = special(&via_egamma);
            out["via_lattice"] = cx(via_lattice);
            out["difference"] = json!(difference);
        }
    }
    Ok(out)
}
