//! What `eval` and `scan` can evaluate.

use std::fmt;
use std::str::FromStr;

use qkzr::dynamical::{felder_rmatrix, fusion_matrix};
use qkzr::exchange::{chi, exchange_rmatrix, exchange_rmatrix_monodromy, unitary_exchange, z_of_u};
use qkzr::linalg::OperatorVV;
use qkzr::specfun::{egamma, qhyper_2phi1, theta, theta1, SpecialValue};
use qkzr::trig::rmat_trig;
use qkzr::{ModelParams, TruncationPolicy, Weight, C};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// Felder's elliptic R(u,λ), step γ.
    Felder,
    /// The exchange matrix R_k(u,λ) from its closed form.
    Exchange,
    /// R_k(u,λ) assembled from connection coefficients.
    ExchangeMonodromy,
    /// The unitary exchange matrix B(z,λ).
    Unitary,
    /// The trigonometric R(z).
    Trig,
    /// The fusion matrix J(λ).
    Fusion,
    Chi,
    Theta1,
    Theta,
    Hyper2phi1,
    Egamma,
}

impl Target {
    pub const ALL: [Target; 11] = [
        Target::Felder,
        Target::Exchange,
        Target::ExchangeMonodromy,
        Target::Unitary,
        Target::Trig,
        Target::Fusion,
        Target::Chi,
        Target::Theta1,
        Target::Theta,
        Target::Hyper2phi1,
        Target::Egamma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Target::Felder => "felder",
            Target::Exchange => "exchange",
            Target::ExchangeMonodromy => "exchange-monodromy",
            Target::Unitary => "unitary",
            Target::Trig => "trig",
            Target::Fusion => "fusion",
            Target::Chi => "chi",
            Target::Theta1 => "theta1",
            Target::Theta => "theta",
            Target::Hyper2phi1 => "2phi1",
            Target::Egamma => "egamma",
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(
            self,
            Target::Felder | Target::Exchange | Target::ExchangeMonodromy | Target::Unitary | Target::Trig | Target::Fusion
        )
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Target {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Target::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| {
            let names: Vec<_> = Target::ALL.iter().map(|t| t.name()).collect();
            CliError::ConfigInvalid(format!("unknown target '{s}' (expected one of {})", names.join(", ")))
        })
    }
}

/// Point arguments; which ones are used depends on the target.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Point {
    pub u: Option<C>,
    pub z: Option<C>,
    pub tau: Option<C>,
    pub r: Option<C>,
    pub s: Option<C>,
    pub t: Option<C>,
    pub zeta: Option<C>,
    pub sigma: Option<C>,
}

fn need(v: Option<C>, name: &str, target: Target) -> Result<C, CliError> {
    v.ok_or_else(|| CliError::ConfigInvalid(format!("target {target} needs --{name}")))
}

impl Point {
    pub fn u(&self, target: Target) -> Result<C, CliError> {
        need(self.u, "u", target)
    }

    /// z itself, or e^{−2πiu}.
    pub fn z(&self, target: Target) -> Result<C, CliError> {
        match (self.z, self.u) {
            (Some(z), _) => Ok(z),
            (None, Some(u)) => Ok(z_of_u(u)),
            (None, None) => Err(CliError::ConfigInvalid(format!("target {target} needs --z or --u"))),
        }
    }
}

/// An evaluated target.
#[derive(Debug, Clone)]
pub enum Value {
    Matrix(OperatorVV),
    Scalar(SpecialValue),
    Chi { via_products: SpecialValue, via_egamma: SpecialValue, via_lattice: C, difference: f64 },
}

pub struct Model<'a> {
    pub params: &'a ModelParams,
    pub lambda: &'a Weight,
    pub policy: &'a TruncationPolicy,
}

pub fn evaluate(target: Target, pt: &Point, m: &Model) -> Result<Value, CliError> {
    let (params, lambda, policy) = (m.params, m.lambda, m.policy);
    let n = params.n();
    Ok(match target {
        Target::Felder => Value::Matrix(felder_rmatrix(pt.u(target)?, lambda, params.gamma(), params.tau(), n, policy)?),
        Target::Exchange => Value::Matrix(exchange_rmatrix(pt.u(target)?, lambda, params, policy)?),
        Target::ExchangeMonodromy => Value::Matrix(exchange_rmatrix_monodromy(pt.u(target)?, lambda, params, policy)?),
        Target::Unitary => Value::Matrix(unitary_exchange(pt.u(target)?, lambda, params, policy)?),
        Target::Trig => Value::Matrix(rmat_trig(pt.z(target)?, n, params.q())?),
        Target::Fusion => Value::Matrix(fusion_matrix(lambda, n, params.q(), policy)?),
        Target::Chi => {
            let c = chi(pt.u(target)?, params, policy)?;
            Value::Chi {
                via_products: c.via_products,
                via_egamma: c.via_egamma,
                via_lattice: c.via_lattice,
                difference: c.difference,
            }
        }
        Target::Theta1 => Value::Scalar(theta1(pt.u(target)?, pt.tau.unwrap_or(params.tau()), policy)?),
        Target::Theta => Value::Scalar(theta(pt.z(target)?, params.q(), policy)?),
        Target::Hyper2phi1 => Value::Scalar(qhyper_2phi1(
            need(pt.r, "r", target)?,
            need(pt.s, "s", target)?,
            need(pt.t, "t", target)?,
            &params.p_base(),
            pt.z(target)?,
            policy,
        )?),
        Target::Egamma => Value::Scalar(egamma(
            pt.u(target)?,
            pt.zeta.unwrap_or((n as f64 + 1.0) * params.gamma()),
            pt.sigma.unwrap_or(params.tau()),
            policy,
        )?),
    })
}

pub const BASIS_NOTE: &str =
    "row-major; row and column index i*(n+1)+j labels v_i (x) v_j, acting on column vectors";
