use super::{SpecialValue, TruncationPolicy, C, PI_I, TWO_PI_I};
use crate::error::{Error, Result};

/// Length of a q-Pochhammer product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Finite(usize),
    Infinite,
}

fn exhausted(policy: &TruncationPolicy, last: f64) -> Error {
    Error::PolicyExhausted {
        terms: policy.max_terms,
        last,
    }
}

/// (a;q)_N = ∏_{j=0}^{N−1} (1 − a q^j). The infinite product stops once |a q^j| < tail_tol.
pub fn qpochhammer(a: C, q: C, order: Order, policy: &TruncationPolicy) -> Result<SpecialValue> {
    match order {
        Order::Finite(n) => {
            let mut prod = C::new(1.0, 0.0);
            let mut aq = a;
            for _ in 0..n {
                prod *= C::new(1.0, 0.0) - aq;
                aq *= q;
            }
            Ok(SpecialValue::new(prod, 0.0, n))
        }
        Order::Infinite => {
            let qn = q.norm();
            if qn >= 1.0 {
                return Err(Error::NonConvergent(format!("(a;q)_inf with |q| = {qn}")));
            }
            let mut prod = C::new(1.0, 0.0);
            let mut aq = a;
            for j in 0..policy.max_terms {
                let dev = aq.norm();
                if dev < policy.tail_tol {
                    let err = prod.norm() * dev / (1.0 - qn);
                    return Ok(SpecialValue::new(prod, err, j));
                }
                prod *= C::new(1.0, 0.0) - aq;
                aq *= q;
            }
            Err(exhausted(policy, aq.norm()))
        }
    }
}

/// (x; a, b)_∞ = ∏_{j,l≥0} (1 − a^j b^l x), the double q-Pochhammer symbol.
///
/// Truncated line by line in `l`; the outer loop stops once a whole line is negligible.
pub fn double_pochhammer(x: C, a: C, b: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let (an, bn) = (a.norm(), b.norm());
    if an >= 1.0 || bn >= 1.0 {
        return Err(Error::NonConvergent(format!(
            "double Pochhammer with |a| = {an}, |b| = {bn}"
        )));
    }
    let one = C::new(1.0, 0.0);
    let mut prod = one;
    let mut terms = 0usize;
    let mut line = x;
    for _ in 0..policy.max_terms {
        if line.norm() < policy.tail_tol {
            let err = prod.norm() * line.norm() / ((1.0 - an) * (1.0 - bn));
            return Ok(SpecialValue::new(prod, err, terms));
        }
        let mut w = line;
        let mut closed = false;
        for _ in 0..policy.max_terms {
            if w.norm() < policy.tail_tol {
                closed = true;
                break;
            }
            prod *= one - w;
            w *= a;
            terms += 1;
        }
        if !closed {
            return Err(exhausted(policy, w.norm()));
        }
        line *= b;
    }
    Err(exhausted(policy, line.norm()))
}

/// Θ(z;q) = ∏_{j≥0} (1 − z q^j)(1 − z⁻¹ q^{j+1})(1 − q^{j+1}).
pub fn theta(z: C, q: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("theta"));
    }
    let qn = q.norm();
    if qn >= 1.0 {
        return Err(Error::NonConvergent(format!("theta with |q| = {qn}")));
    }
    let zinv = z.inv();
    let one = C::new(1.0, 0.0);
    let mut prod = one;
    let mut qj = one;
    for j in 0..policy.max_terms {
        let qj1 = qj * q;
        let a = z * qj;
        let b = zinv * qj1;
        let dev = a.norm() + b.norm() + qj1.norm();
        if dev < policy.tail_tol {
            let err = prod.norm() * dev / (1.0 - qn);
            return Ok(SpecialValue::new(prod, err, j));
        }
        prod *= (one - a) * (one - b) * (one - qj1);
        qj = qj1;
    }
    Err(exhausted(policy, (z * qj).norm()))
}

/// First Jacobi theta function in product form,
/// ϑ₁(u;τ) = −i e^{πiτ/4} e^{πiu} Θ(e^{−2πiu}; e^{2πiτ}).
pub fn theta1(u: C, tau: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    if tau.im <= 0.0 {
        return Err(Error::NonConvergent(format!("theta1 needs Im(tau) > 0, got {}", tau.im)));
    }
    let nome = (TWO_PI_I * tau).exp();
    let z = (-TWO_PI_I * u).exp();
    let th = theta(z, nome, policy)?;
    let pref = C::new(0.0, -1.0) * (PI_I * tau / 4.0).exp() * (PI_I * u).exp();
    Ok(SpecialValue::new(
        pref * th.value,
        pref.norm() * th.est_error,
        th.terms_used,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::{cpower, QBase};
    use super::*;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn pochhammer_trivial_cases() {
        let q = C::new(0.5, 0.2);
        let a = C::new(0.3, -0.7);
        assert_eq!(qpochhammer(a, q, Order::Finite(0), &pol()).unwrap().value, C::new(1.0, 0.0));
        let v = qpochhammer(C::new(1.0, 0.0), q, Order::Finite(3), &pol()).unwrap();
        assert_eq!(v.value, C::new(0.0, 0.0));
        assert!(matches!(
            qpochhammer(a, C::new(1.0, 0.0), Order::Infinite, &pol()),
            Err(Error::NonConvergent(_))
        ));
    }

    #[test]
    fn pochhammer_infinite_doubling_and_exhaustion() {
        let q = C::new(0.6, 0.3);
        let a = C::new(2.0, -1.0);
        let p = pol();
        let v = qpochhammer(a, q, Order::Infinite, &p).unwrap();
        let w = qpochhammer(a, q, Order::Infinite, &p.doubled()).unwrap();
        assert!(v.agrees_with(&w, &p));
        let tiny = TruncationPolicy::new(5, 1e-16).unwrap();
        assert!(matches!(
            qpochhammer(a, q, Order::Infinite, &tiny),
            Err(Error::PolicyExhausted { .. })
        ));
    }

    #[test]
    fn double_pochhammer_reduces_to_single() {
        // (x; a, 0)_∞ = (x; a)_∞ and (x; a, b) = (x; a)(bx; a, b)
        let (x, a, b) = (C::new(0.8, -0.3), C::new(0.5, 0.2), C::new(-0.3, 0.4));
        let single = qpochhammer(x, a, Order::Infinite, &pol()).unwrap().value;
        let d0 = double_pochhammer(x, a, C::new(0.0, 0.0), &pol()).unwrap().value;
        assert!((single - d0).norm() < 1e-14);
        let full = double_pochhammer(x, a, b, &pol()).unwrap().value;
        let shifted = double_pochhammer(b * x, a, b, &pol()).unwrap().value;
        assert!((full - single * shifted).norm() < 1e-13 * full.norm().max(1.0));
        assert!(double_pochhammer(x, C::new(1.0, 0.0), b, &pol()).is_err());
    }

    #[test]
    fn theta_vanishes_at_one() {
        let v = theta(C::new(1.0, 0.0), C::new(0.4, 0.1), &pol()).unwrap();
        assert_eq!(v.value.norm(), 0.0);
        assert_eq!(theta(C::new(0.0, 0.0), C::new(0.4, 0.0), &pol()), Err(Error::ZeroArgument("theta")));
    }

    #[test]
    fn theta_quasi_periodicity() {
        let q = C::new(0.55, -0.2);
        for z in [C::new(0.7, 0.3), C::new(-1.3, 2.0), C::new(0.05, -0.4)] {
            let a = theta(q * z, q, &pol()).unwrap().value;
            let b = theta(z, q, &pol()).unwrap().value;
            assert!((z * a + b).norm() < 1e-13 * b.norm().max(1.0));
            let c = theta(z.inv(), q, &pol()).unwrap().value;
            assert!((a - c).norm() < 1e-13 * a.norm().max(1.0));
            // zΘ(z) = −qΘ(z/q)
            let d = theta(z / q, q, &pol()).unwrap().value;
            assert!((z * b + q * d).norm() < 1e-13 * b.norm().max(1.0));
        }
    }

    #[test]
    fn theta1_odd_and_zero() {
        let tau = C::new(0.1, 0.8);
        assert!(theta1(C::new(0.0, 0.0), tau, &pol()).unwrap().value.norm() < 1e-300);
        let u = C::new(0.23, 0.07);
        let a = theta1(u, tau, &pol()).unwrap().value;
        let b = theta1(-u, tau, &pol()).unwrap().value;
        assert!((a + b).norm() < 1e-14);
        assert!(theta1(u, C::new(0.2, 0.0), &pol()).is_err());
    }

    #[test]
    fn theta1_matches_fourier_series() {
        // ϑ₁(u;τ) = −Σ_j exp(πi(j+½)²τ + 2πi(j+½)(u+½))
        let tau = C::new(-0.15, 0.6);
        let u = C::new(0.31, -0.04);
        let mut s = C::new(0.0, 0.0);
        for j in -40..=40 {
            let h = j as f64 + 0.5;
            s -= (PI_I * h * h * tau + TWO_PI_I * h * (u + 0.5)).exp();
        }
        let v = theta1(u, tau, &pol()).unwrap().value;
        assert!((v - s).norm() < 1e-13);
    }

    #[test]
    fn bridge_between_theta_and_theta1() {
        for (u, tau) in [
            (C::new(0.12, 0.03), C::new(0.05, 0.4)),
            (C::new(-0.31, -0.02), C::new(-0.2, 0.9)),
            (C::new(0.37, 0.1), C::new(0.3, 0.25)),
        ] {
            let z = (-TWO_PI_I * u).exp();
            let q = QBase::new((TWO_PI_I * tau).exp()).unwrap();
            let lhs = theta(z, q.value(), &pol()).unwrap().value;
            let rhs = C::new(0.0, 1.0)
                * cpower(q.value(), C::new(-0.125, 0.0)).unwrap()
                * cpower(z, C::new(0.5, 0.0)).unwrap()
                * theta1(u, tau, &pol()).unwrap().value;
            assert!((lhs - rhs).norm() < 1e-13 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
        }
    }
}
