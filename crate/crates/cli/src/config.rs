//! Run configuration: defaults, JSON file, then command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qkzr::suites::{parse_suites, Suite, SuiteConfig};
use qkzr::{ModelParams, TruncationPolicy, Weight, C};

use crate::error::CliError;
use crate::parse::LambdaSpec;

/// A complex number on the wire: `[re, im]`, or a bare real when reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cx {
    Pair([f64; 2]),
    Real(f64),
}

impl Cx {
    pub fn value(&self) -> C {
        match *self {
            Cx::Pair([a, b]) => C::new(a, b),
            Cx::Real(a) => C::new(a, 0.0),
        }
    }
}

impl From<C> for Cx {
    fn from(z: C) -> Self {
        Cx::Pair([z.re, z.im])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaField {
    Coords(Vec<Cx>),
    Word(String),
}

impl LambdaField {
    pub fn spec(&self) -> Result<LambdaSpec, CliError> {
        match self {
            LambdaField::Word(w) if w == "random" => Ok(LambdaSpec::Random),
            LambdaField::Word(w) => Err(CliError::ConfigInvalid(format!("lambda must be \"random\" or a list, got \"{w}\""))),
            LambdaField::Coords(c) => Ok(LambdaSpec::Fixed(Weight(c.iter().map(Cx::value).collect()))),
        }
    }
}

impl From<&LambdaSpec> for LambdaField {
    fn from(l: &LambdaSpec) -> Self {
        match l {
            LambdaSpec::Random => LambdaField::Word("random".into()),
            LambdaSpec::Fixed(w) => LambdaField::Coords(w.coords().iter().map(|&z| z.into()).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    pub max_terms: usize,
    pub tail_tol: f64,
    pub pole_tol: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        let p = TruncationPolicy::default();
        PolicyConfig {
            max_terms: p.max_terms,
            tail_tol: p.tail_tol,
            pole_tol: p.pole_tol,
        }
    }
}

impl PolicyConfig {
    pub fn policy(&self) -> Result<TruncationPolicy, CliError> {
        let mut p = TruncationPolicy::new(self.max_terms, self.tail_tol)?;
        if !(self.pole_tol >= 0.0 && self.pole_tol.is_finite()) {
            return Err(CliError::ConfigInvalid(format!("pole_tol must be finite and non-negative, got {}", self.pole_tol)));
        }
        p.pole_tol = self.pole_tol;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub n: usize,
    pub q: Cx,
    pub kappa: Cx,
    pub lambda: LambdaField,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub policy: PolicyConfig,
    pub suites: Vec<String>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 2,
            q: Cx::Pair([0.6, 0.0]),
            kappa: Cx::Pair([-1.7, 0.0]),
            lambda: LambdaField::Word("random".into()),
            seed: 42,
            samples: 20,
            tol: 1e-8,
            policy: PolicyConfig::default(),
            suites: vec!["all".into()],
            out: None,
        }
    }
}

/// Values given on the command line; each one that is set replaces the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub q: Option<C>,
    pub kappa: Option<C>,
    pub lambda: Option<LambdaSpec>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tol: Option<f64>,
    pub max_terms: Option<usize>,
    pub tail_tol: Option<f64>,
    pub pole_tol: Option<f64>,
    pub suites: Option<Vec<String>>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = o.$field { self.$field = v.into(); } )* };
        }
        set!(n, q, kappa, seed, samples, tol, suites);
        if let Some(l) = &o.lambda {
            self.lambda = l.into();
        }
        if let Some(v) = o.max_terms {
            self.policy.max_terms = v;
        }
        if let Some(v) = o.tail_tol {
            self.policy.tail_tol = v;
        }
        if let Some(v) = o.pole_tol {
            self.policy.pole_tol = v;
        }
        if o.out.is_some() {
            self.out = o.out;
        }
    }

    /// Validated model parameters. Region violations are reported as such.
    pub fn params(&self) -> Result<ModelParams, CliError> {
        let (q, kappa) = (self.q.value(), self.kappa.value());
        if !(q.re.is_finite() && q.im.is_finite() && kappa.re.is_finite() && kappa.im.is_finite()) {
            return Err(CliError::ConfigInvalid("q and kappa must be finite".into()));
        }
        Ok(ModelParams::new(self.n, q, kappa)?)
    }

    pub fn suites(&self) -> Result<Vec<Suite>, CliError> {
        if self.suites.is_empty() {
            return Err(CliError::ConfigInvalid("no suites selected".into()));
        }
        parse_suites(&self.suites).map_err(|e| CliError::ConfigInvalid(e.to_string()))
    }

    /// λ for single evaluations: the fixed weight, or one seeded draw.
    pub fn weight(&self) -> Result<Weight, CliError> {
        let w = match self.lambda.spec()? {
            LambdaSpec::Fixed(w) => w,
            LambdaSpec::Random => {
                let mut rng = qkzr::sampling::sample_rng(self.seed, "lambda", 0);
                qkzr::sampling::generic_weight(&mut rng, self.n)
            }
        };
        self.check_weight(&w)?;
        Ok(w)
    }

    fn check_weight(&self, w: &Weight) -> Result<(), CliError> {
        if w.len() != self.n + 1 {
            return Err(CliError::ConfigInvalid(format!(
                "lambda has {} coordinates, rank {} needs {}",
                w.len(),
                self.n,
                self.n + 1
            )));
        }
        if w.coords().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(CliError::ConfigInvalid("lambda must be finite".into()));
        }
        Ok(())
    }

    /// Everything the check engine needs, validated.
    pub fn suite_config(&self) -> Result<SuiteConfig, CliError> {
        let params = self.params()?;
        if self.samples == 0 {
            return Err(CliError::ConfigInvalid("samples must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(CliError::ConfigInvalid(format!("tol must be positive, got {}", self.tol)));
        }
        let lambda = match self.lambda.spec()? {
            LambdaSpec::Random => None,
            LambdaSpec::Fixed(w) => {
                self.check_weight(&w)?;
                Some(w)
            }
        };
        Ok(SuiteConfig {
            n: params.n(),
            q: params.q(),
            kappa: params.kappa(),
            lambda,
            seed: self.seed,
            samples: self.samples,
            tol: self.tol,
            policy: self.policy.policy()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_overrides() {
        let mut c = RunConfig::from_json(r#"{"n": 3, "q": [0.5, 0.1], "kappa": -2.5, "lambda": [[0.1,0],[0.2,0.1],0.3,-0.4]}"#)
            .unwrap();
        assert_eq!(c.n, 3);
        assert_eq!(c.q.value(), C::new(0.5, 0.1));
        assert_eq!(c.kappa.value(), C::new(-2.5, 0.0));
        assert_eq!(c.seed, 42);
        assert_eq!(c.weight().unwrap().len(), 4);
        c.apply(Overrides {
            q: Some(C::new(0.7, 0.0)),
            seed: Some(7),
            ..Default::default()
        });
        assert_eq!(c.q.value(), C::new(0.7, 0.0));
        assert_eq!(c.seed, 7);
        assert_eq!(c.n, 3);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_lambda() {
        assert!(RunConfig::from_json(r#"{"nn": 3}"#).is_err());
        let c = RunConfig::from_json(r#"{"lambda": "sometimes"}"#).unwrap();
        assert!(c.weight().is_err());
    }

    #[test]
    fn region_violation() {
        let c = RunConfig {
            q: Cx::Real(1.5),
            ..Default::default()
        };
        assert!(matches!(c.suite_config(), Err(CliError::RegionViolation(_))));
    }

    #[test]
    fn round_trips_through_json() {
        let c = RunConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"q\":[0.6,0.0]"));
        assert_eq!(RunConfig::from_json(&text).unwrap(), c);
    }
}
