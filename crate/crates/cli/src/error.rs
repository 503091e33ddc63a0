use serde_json::json;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("parameter region violated: {0}")]
    RegionViolation(String),
    #[error(transparent)]
    Model(qkzr::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<qkzr::Error> for CliError {
    fn from(e: qkzr::Error) -> Self {
        match e {
            qkzr::Error::RegionViolation(m) => CliError::RegionViolation(m),
            e => CliError::Model(e),
        }
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid(_) => "ConfigInvalid",
            CliError::RegionViolation(_) => "RegionViolation",
            CliError::Io { .. } => "Io",
            CliError::Model(e) => model_kind(e),
        }
    }

    /// The structured error record printed on failure.
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = json!({ "error": { "kind": self.kind(), "message": self.to_string() } });
        if let CliError::Model(qkzr::Error::PoleHit { what, magnitude }) = self {
            v["error"]["location"] = json!(what);
            v["error"]["magnitude"] = json!(magnitude);
        }
        v
    }
}

pub fn model_kind(e: &qkzr::Error) -> &'static str {
    use qkzr::Error::*;
    match e {
        NonConvergent(_) => "NonConvergent",
        PolicyExhausted { .. } => "PolicyExhausted",
        ZeroArgument(_) => "ZeroArgument",
        PoleHit { .. } => "PoleHit",
        IndexOutOfRange { .. } => "IndexOutOfRange",
        LengthMismatch(..) => "LengthMismatch",
        ZeroKappa => "ZeroKappa",
        DegenerateCoefficients(_) => "DegenerateCoefficients",
        ChainBlocked(_) => "ChainBlocked",
        NonGeneric(_) => "NonGeneric",
        DomainError(_) => "DomainError",
        IllConditioned(_) => "IllConditioned",
        RegionViolation(_) => "RegionViolation",
    }
}
