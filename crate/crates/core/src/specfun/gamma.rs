use super::theta::{qpochhammer, Order};
use super::{cpower, QBase, SpecialValue, TruncationPolicy, C, TWO_PI_I};
use crate::error::{Error, Result};

/// Γ_q(a) = (1−q)^{1−a} ∏_{j≥0} (1 − q^{j+1})/(1 − q^{j+a}).
///
/// `q^{j+a}` is formed as `q^j · q^a` with the logarithm carried by `base`,
/// and `(1−q)^{1−a}` uses the principal branch.
pub fn qgamma(a: C, base: &QBase, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let q = base.value();
    let qn = q.norm();
    if qn >= 1.0 {
        return Err(Error::NonConvergent(format!("q-gamma with |q| = {qn}")));
    }
    let one = C::new(1.0, 0.0);
    let mut prod = cpower(one - q, one - a)?;
    let mut qj = one;
    let qa = base.pow(a);
    for j in 0..policy.max_terms {
        let num = qj * q;
        let den = qj * qa;
        let dev = num.norm() + den.norm();
        if dev < policy.tail_tol {
            let err = prod.norm() * dev / (1.0 - qn);
            return Ok(SpecialValue::new(prod, err, j));
        }
        let d = one - den;
        policy.guard("q-gamma denominator 1 - q^(j+a)", d)?;
        prod *= (one - num) / d;
        qj = num;
    }
    Err(Error::PolicyExhausted {
        terms: policy.max_terms,
        last: qj.norm(),
    })
}

/// The q-number {a}_q = (1 − q^a)/(1 − q).
pub fn qnumber(a: C, base: &QBase) -> C {
    (C::new(1.0, 0.0) - base.pow(a)) / (C::new(1.0, 0.0) - base.value())
}

/// C(q) = (1 − q)(q;q)³_∞, the constant of the q-gamma reflection formula.
pub fn c_const(q: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let qq = qpochhammer(q, q, Order::Infinite, policy)?;
    let v = (C::new(1.0, 0.0) - q) * qq.value.powu(3);
    Ok(SpecialValue::new(v, 3.0 * v.norm() * qq.est_error / qq.value.norm().max(f64::MIN_POSITIVE), qq.terms_used))
}

/// Elliptic gamma function
/// Γ_e(u,ζ,σ) = ∏_{j,l≥0} (1 − e^{2πi((j+1)ζ+(l+1)σ−u)}) / (1 − e^{2πi(jζ+lσ+u)}).
///
/// Truncated line by line: for each `l` the `j`-product runs until both factor
/// deviations drop below `tail_tol`; the outer loop stops at the first line whose
/// leading factor is already negligible.
pub fn egamma(u: C, zeta: C, sigma: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    if zeta.im <= 0.0 || sigma.im <= 0.0 {
        return Err(Error::NonConvergent(format!(
            "elliptic gamma needs Im(zeta), Im(sigma) > 0 (got {}, {})",
            zeta.im, sigma.im
        )));
    }
    let one = C::new(1.0, 0.0);
    let mut prod = one;
    let mut terms = 0usize;
    let ra = (TWO_PI_I * zeta).exp().norm();
    let rb = (TWO_PI_I * sigma).exp().norm();
    for l in 0..policy.max_terms {
        let lf = l as f64;
        let mut line_done_at = None;
        for j in 0..policy.max_terms {
            let jf = j as f64;
            let num = (TWO_PI_I * ((jf + 1.0) * zeta + (lf + 1.0) * sigma - u)).exp();
            let den = (TWO_PI_I * (jf * zeta + lf * sigma + u)).exp();
            let dev = num.norm() + den.norm();
            if dev < policy.tail_tol {
                line_done_at = Some(j);
                break;
            }
            let d = one - den;
            policy.guard("elliptic gamma denominator", d)?;
            prod *= (one - num) / d;
            terms += 1;
        }
        match line_done_at {
            Some(0) => {
                let lead = (TWO_PI_I * (zeta + (lf + 1.0) * sigma - u)).exp().norm()
                    + (TWO_PI_I * (lf * sigma + u)).exp().norm();
                let err = prod.norm() * lead / ((1.0 - ra) * (1.0 - rb));
                return Ok(SpecialValue::new(prod, err, terms));
            }
            Some(_) => {}
            None => {
                return Err(Error::PolicyExhausted {
                    terms: policy.max_terms,
                    last: f64::NAN,
                })
            }
        }
    }
    Err(Error::PolicyExhausted {
        terms: policy.max_terms,
        last: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::super::theta;
    use super::*;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn qgamma_at_one() {
        let b = QBase::new(C::new(0.63, 0.1)).unwrap();
        let g = qgamma(C::new(1.0, 0.0), &b, &pol()).unwrap().value;
        assert!((g - 1.0).norm() < 1e-14);
    }

    #[test]
    fn qgamma_recurrence_and_reflection() {
        let b = QBase::new(C::new(0.5, -0.25)).unwrap();
        let q = b.value();
        let p = pol();
        let cq = c_const(q, &p).unwrap().value;
        for a in [C::new(0.3, 0.2), C::new(-0.45, 0.7), C::new(1.8, -0.3)] {
            let g = qgamma(a, &b, &p).unwrap().value;
            let g1 = qgamma(a + 1.0, &b, &p).unwrap().value;
            assert!((g1 - qnumber(a, &b) * g).norm() < 1e-12 * g1.norm().max(1.0));
            let gr = qgamma(C::new(1.0, 0.0) - a, &b, &p).unwrap().value;
            let th = theta(b.pow(a), q, &p).unwrap().value;
            assert!((g * gr * th - cq).norm() < 1e-12);
        }
    }

    #[test]
    fn qgamma_pole_detected() {
        let b = QBase::new(C::new(0.5, 0.0)).unwrap();
        assert!(matches!(
            qgamma(C::new(-2.0, 0.0), &b, &pol()),
            Err(Error::PoleHit { .. })
        ));
    }

    #[test]
    fn egamma_symmetric_in_periods() {
        let u = C::new(0.17, 0.03);
        let z = C::new(0.1, 0.35);
        let s = C::new(-0.05, 0.22);
        let a = egamma(u, z, s, &pol()).unwrap();
        let b = egamma(u, s, z, &pol()).unwrap();
        assert!((a.value - b.value).norm() < 1e-13 * a.value.norm().max(1.0));
        let c = egamma(u, z, s, &pol().doubled()).unwrap();
        assert!(a.agrees_with(&c, &pol()));
        assert!(egamma(u, C::new(0.1, -0.1), s, &pol()).is_err());
    }

    #[test]
    fn egamma_functional_equation() {
        // Γ_e(u+σ) = θ₀(e^{2πiu}; e^{2πiζ}) Γ_e(u), θ₀(x;a) = (x;a)_∞ (a/x;a)_∞.
        let u = C::new(0.21, -0.02);
        let z = C::new(0.05, 0.3);
        let s = C::new(0.12, 0.27);
        let p = pol();
        let lhs = egamma(u + s, z, s, &p).unwrap().value;
        let g = egamma(u, z, s, &p).unwrap().value;
        let x = (TWO_PI_I * u).exp();
        let a = (TWO_PI_I * z).exp();
        let th0 = qpochhammer(x, a, Order::Infinite, &p).unwrap().value
            * qpochhammer(a / x, a, Order::Infinite, &p).unwrap().value;
        assert!((lhs - th0 * g).norm() < 1e-12 * lhs.norm().max(1.0));
    }
}
