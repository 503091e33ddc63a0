//! q-series and elliptic special functions in double-precision complex arithmetic.
//!
//! Every infinite product or series here is truncated under a [`TruncationPolicy`]
//! and returns a [`SpecialValue`] carrying the value, a bound on the neglected
//! tail, and the number of terms used.
//!
//! | Function | Definition |
//! |----------|------------|
//! | [`qpochhammer`] | (a;q)_N = ∏_{j<N} (1 − a q^j) |
//! | [`theta`] | Θ(z;q) = ∏ (1 − z q^j)(1 − z⁻¹ q^{j+1})(1 − q^{j+1}) |
//! | [`theta1`] | Jacobi ϑ₁(u;τ) in product form |
//! | [`qgamma`] | Γ_q(a) = (1−q)^{1−a} ∏ (1 − q^{j+1})/(1 − q^{j+a}) |
//! | [`egamma`] | elliptic gamma Γ_e(u,ζ,σ) |
//! | [`qhyper_2phi1`] | Heine's ₂φ₁(q^r, q^s, q^t; q, z) |

mod gamma;
mod hyper;
mod stats;
mod theta;

pub use gamma::{c_const, egamma, qgamma, qnumber};
pub use hyper::{heine_residual, heine_series, qhyper_2phi1};
pub use stats::{track, TruncationStats};
pub use theta::{double_pochhammer, qpochhammer, theta, theta1, Order};

use crate::error::{pole, Error, Result};
use num_complex::Complex64;

pub type C = Complex64;

pub(crate) const TWO_PI_I: C = C::new(0.0, 2.0 * std::f64::consts::PI);
pub(crate) const PI_I: C = C::new(0.0, std::f64::consts::PI);

/// How far an infinite product or series is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Hard cap on the number of factors (or terms) per index.
    pub max_terms: usize,
    /// A factor deviation (or relative term size) below this ends the evaluation.
    pub tail_tol: f64,
    /// Denominators smaller than this in magnitude raise [`Error::PoleHit`].
    pub pole_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            max_terms: 400,
            tail_tol: 1e-16,
            pole_tol: 1e-9,
        }
    }
}

impl TruncationPolicy {
    pub fn new(max_terms: usize, tail_tol: f64) -> Result<Self> {
        if max_terms == 0 || !(tail_tol > 0.0) {
            return Err(Error::DomainError(format!(
                "invalid truncation policy (max_terms={max_terms}, tail_tol={tail_tol})"
            )));
        }
        Ok(TruncationPolicy {
            max_terms,
            tail_tol,
            ..Default::default()
        })
    }

    /// The policy used by the truncation-doubling check: twice the terms, a tenth of the tolerance.
    pub fn doubled(&self) -> Self {
        TruncationPolicy {
            max_terms: 2 * self.max_terms,
            tail_tol: self.tail_tol / 10.0,
            pole_tol: self.pole_tol,
        }
    }

    pub(crate) fn guard(&self, what: &str, denom: C) -> Result<()> {
        let m = denom.norm();
        if m < self.pole_tol || !m.is_finite() {
            Err(pole(what, m))
        } else {
            Ok(())
        }
    }
}

/// A truncated special-function value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialValue {
    pub value: C,
    /// Bound on the magnitude of the neglected tail.
    pub est_error: f64,
    pub terms_used: usize,
}

impl SpecialValue {
    pub(crate) fn new(value: C, est_error: f64, terms_used: usize) -> Self {
        let v = SpecialValue {
            value,
            est_error,
            terms_used,
        };
        stats::record(&v);
        v
    }

    /// Whether `other` (computed under a doubled policy) agrees with `self` within
    /// the truncation contract `10·tail_tol`, scaled by `max(1, |value|)`.
    pub fn agrees_with(&self, other: &SpecialValue, policy: &TruncationPolicy) -> bool {
        let scale = self.value.norm().max(other.value.norm()).max(1.0);
        (self.value - other.value).norm() <= 10.0 * policy.tail_tol.max(f64::EPSILON) * scale
    }
}

/// A q-type base with a fixed logarithm, so that complex powers `q^a = exp(a·ln q)`
/// compose consistently (`q^a q^b = q^{a+b}`) for every exponent used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QBase {
    value: C,
    ln: C,
}

impl QBase {
    /// Base with the principal logarithm.
    pub fn new(value: C) -> Result<Self> {
        if value.norm() == 0.0 {
            return Err(Error::ZeroArgument("QBase::new"));
        }
        Ok(QBase {
            value,
            ln: value.ln(),
        })
    }

    /// Base `exp(ln)` carrying the given logarithm.
    pub fn from_ln(ln: C) -> Self {
        QBase { value: ln.exp(), ln }
    }

    pub fn value(&self) -> C {
        self.value
    }

    pub fn ln(&self) -> C {
        self.ln
    }

    pub fn pow(&self, a: C) -> C {
        (a * self.ln).exp()
    }

    pub fn powf(&self, a: f64) -> C {
        (self.ln * a).exp()
    }
}

/// `z^a = exp(a·Log z)` with the principal logarithm (imaginary part in (−π, π]).
pub fn cpower(z: C, a: C) -> Result<C> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("cpower"));
    }
    Ok((a * z.ln()).exp())
}

/// Whether `z` stays at least `margin` (in argument) away from the negative real axis,
/// where the principal branch of [`cpower`] is discontinuous.
pub fn off_branch_cut(z: C, margin: f64) -> bool {
    z.norm() > 0.0 && std::f64::consts::PI - z.arg().abs() > margin
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpower_trivial_exponents() {
        let z = C::new(-0.3, 1.7);
        assert!((cpower(z, C::new(1.0, 0.0)).unwrap() - z).norm() < 1e-15);
        assert_eq!(cpower(z, C::new(0.0, 0.0)).unwrap(), C::new(1.0, 0.0));
        assert_eq!(cpower(C::new(0.0, 0.0), C::new(0.5, 0.0)), Err(Error::ZeroArgument("cpower")));
    }

    #[test]
    fn cpower_additive_for_fixed_z() {
        let z = C::new(0.4, -2.1);
        let a = C::new(0.3, 0.8);
        let b = C::new(-1.1, 0.25);
        let lhs = cpower(z, a).unwrap() * cpower(z, b).unwrap();
        let rhs = cpower(z, a + b).unwrap();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn cpower_principal_branch_on_negative_axis() {
        // Log(-1) = iπ, so (-1)^{1/2} = i.
        let r = cpower(C::new(-1.0, 0.0), C::new(0.5, 0.0)).unwrap();
        assert!((r - C::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn policy_validation() {
        assert!(TruncationPolicy::new(0, 1e-10).is_err());
        assert!(TruncationPolicy::new(10, 0.0).is_err());
        let p = TruncationPolicy::new(10, 1e-10).unwrap().doubled();
        assert_eq!(p.max_terms, 20);
        assert!((p.tail_tol - 1e-11).abs() < 1e-25);
    }

    #[test]
    fn qbase_powers_compose() {
        let b = QBase::from_ln(C::new(-0.7, 4.0));
        let x = b.pow(C::new(0.3, 0.2)) * b.pow(C::new(0.7, -0.2));
        assert!((x - b.value()).norm() < 1e-14);
    }
}
