use std::fmt;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An infinite product or series was requested outside its convergence region.
    #[error("non-convergent: {0}")]
    NonConvergent(String),
    /// The truncation policy ran out of terms before the tail became negligible.
    #[error("truncation policy exhausted after {terms} terms (last deviation {last:e})")]
    PolicyExhausted { terms: usize, last: f64 },
    #[error("zero argument in {0}")]
    ZeroArgument(&'static str),
    /// A denominator came within the pole tolerance of zero.
    #[error("pole hit in {what}: |denominator| = {magnitude:e}")]
    PoleHit { what: String, magnitude: f64 },
    #[error("index {index} out of range for rank {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("kappa must be nonzero")]
    ZeroKappa,
    #[error("degenerate difference-equation coefficients: {0}")]
    DegenerateCoefficients(String),
    /// The analytic-continuation chain z, pz, p²z, ... ran into a singular coefficient.
    #[error("continuation chain blocked at z = {0}")]
    ChainBlocked(Complexish),
    #[error("non-generic parameters: {0}")]
    NonGeneric(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("ill-conditioned matrix (estimated condition {0:e})")]
    IllConditioned(f64),
    /// |q| ≥ 1 or |p| ≥ 1.
    #[error("parameter region violated: {0}")]
    RegionViolation(String),
}

/// A printable complex number carried inside errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complexish(pub f64, pub f64);

impl fmt::Display for Complexish {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.1 < 0.0 {
            write!(f, "{}-{}i", self.0, -self.1)
        } else {
            write!(f, "{}+{}i", self.0, self.1)
        }
    }
}

impl From<num_complex::Complex64> for Complexish {
    fn from(z: num_complex::Complex64) -> Self {
        Complexish(z.re, z.im)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn pole(what: impl Into<String>, magnitude: f64) -> Error {
    Error::PoleHit {
        what: what.into(),
        magnitude,
    }
}
