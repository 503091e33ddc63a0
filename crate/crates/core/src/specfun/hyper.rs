use super::{QBase, SpecialValue, TruncationPolicy, C};
use crate::error::{Error, Result};

/// Heine's series ₂φ₁(a, b; c; p, z) = Σ_n (a;p)_n (b;p)_n / ((c;p)_n (p;p)_n) zⁿ
/// for raw parameter values `a, b, c`. Requires |p| < 1 and |z| < 1.
pub fn heine_series(a: C, b: C, c: C, p: C, z: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    if p.norm() >= 1.0 {
        return Err(Error::NonConvergent(format!("2phi1 with |p| = {}", p.norm())));
    }
    if z.norm() >= 1.0 {
        return Err(Error::NonConvergent(format!(
            "2phi1 series needs |z| < 1, got {} (use analytic continuation)",
            z.norm()
        )));
    }
    let one = C::new(1.0, 0.0);
    let mut sum = one;
    let mut term = one;
    let mut pk = one;
    for k in 0..policy.max_terms {
        let den = (one - c * pk) * (one - pk * p);
        policy.guard("2phi1 denominator (1 - c p^k)(1 - p^(k+1))", den)?;
        let ratio = (one - a * pk) * (one - b * pk) / den * z;
        term *= ratio;
        sum += term;
        pk *= p;
        let rn = ratio.norm();
        if term.norm() < policy.tail_tol * sum.norm().max(1.0) && rn < 1.0 {
            // Once |c p^k| is small the ratio settles near |z|; bound the geometric tail.
            let tail_ratio = rn.max(z.norm());
            let err = term.norm() * tail_ratio / (1.0 - tail_ratio);
            return Ok(SpecialValue::new(sum, err, k + 2));
        }
    }
    Err(Error::PolicyExhausted {
        terms: policy.max_terms,
        last: term.norm(),
    })
}

/// ₂φ₁(p^r, p^s, p^t; p, z) with exponents taken against the logarithm carried by `base`.
pub fn qhyper_2phi1(r: C, s: C, t: C, base: &QBase, z: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    heine_series(base.pow(r), base.pow(s), base.pow(t), base.value(), z, policy)
}

/// Residual of Heine's q-hypergeometric equation
/// (p^{r+s}z − p^{t−1}) f(p²z) + (−(p^r+p^s)z + p^{t−1} + 1) f(pz) + (z − 1) f(z)
/// for an arbitrary candidate `f`.
pub fn heine_residual(
    r: C,
    s: C,
    t: C,
    base: &QBase,
    z: C,
    mut f: impl FnMut(C) -> Result<C>,
) -> Result<C> {
    let p = base.value();
    let one = C::new(1.0, 0.0);
    let f0 = f(z)?;
    let f1 = f(p * z)?;
    let f2 = f(p * p * z)?;
    let ptm1 = base.pow(t - one);
    Ok((base.pow(r + s) * z - ptm1) * f2 + (-(base.pow(r) + base.pow(s)) * z + ptm1 + one) * f1 + (z - one) * f0)
}
