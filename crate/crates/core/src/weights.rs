//! Weight combinatorics of sl_{n+1} in the ambient (n+1)-coordinate picture.
//!
//! A weight is stored as its n+1 complex coordinates; the invariant form is the
//! plain (unconjugated) coordinate dot product. The basis vector v_m of the
//! vector representation has weight μ_m = (−1,…,−1,n,−1,…,−1)/(n+1).

use crate::error::{Error, Result};
use crate::specfun::{QBase, C, PI_I, TWO_PI_I};
use std::ops::{Add, Mul, Neg, Sub};

/// Parameter bundle (n, q, κ). Everything else is derived on demand:
/// p = q^{−2κ}, τ = log p/(2πi), γ = log q/(πi), with log p := −2κ·Log q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    n: usize,
    q: C,
    kappa: C,
}

impl ModelParams {
    pub fn new(n: usize, q: C, kappa: C) -> Result<Self> {
        if n == 0 {
            return Err(Error::DomainError("rank n must be at least 1".into()));
        }
        if kappa.norm() == 0.0 {
            return Err(Error::ZeroKappa);
        }
        if !(q.norm() < 1.0) || q.norm() == 0.0 {
            return Err(Error::RegionViolation(format!("|q| = {} (need 0 < |q| < 1)", q.norm())));
        }
        let mp = ModelParams { n, q, kappa };
        let pn = mp.p().norm();
        if !(pn < 1.0) {
            return Err(Error::RegionViolation(format!("|p| = {pn} (need |p| < 1)")));
        }
        Ok(mp)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// dim V = n + 1.
    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn q(&self) -> C {
        self.q
    }

    pub fn kappa(&self) -> C {
        self.kappa
    }

    /// Level k = κ − (n+1).
    pub fn level(&self) -> C {
        self.kappa - (self.n as f64 + 1.0)
    }

    pub fn ln_q(&self) -> C {
        self.q.ln()
    }

    pub fn ln_p(&self) -> C {
        -2.0 * self.kappa * self.ln_q()
    }

    pub fn p(&self) -> C {
        self.ln_p().exp()
    }

    pub fn tau(&self) -> C {
        self.ln_p() / TWO_PI_I
    }

    pub fn gamma(&self) -> C {
        self.ln_q() / PI_I
    }

    pub fn q_base(&self) -> QBase {
        QBase::from_ln(self.ln_q())
    }

    /// The base p with log p = −2κ·Log q, so that p^{−1/(2κ)} = q exactly.
    pub fn p_base(&self) -> QBase {
        QBase::from_ln(self.ln_p())
    }

    pub fn q_pow(&self, a: C) -> C {
        (a * self.ln_q()).exp()
    }

    pub fn p_pow(&self, a: C) -> C {
        (a * self.ln_p()).exp()
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        ModelParams::new(n, self.q, self.kappa)
    }
}

/// A point of the Cartan dual, held as n+1 complex coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight(pub Vec<C>);

impl Weight {
    pub fn zero(n: usize) -> Self {
        Weight(vec![C::new(0.0, 0.0); n + 1])
    }

    pub fn from_reals(xs: &[f64]) -> Self {
        Weight(xs.iter().map(|&x| C::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[C] {
        &self.0
    }

    pub fn scale(&self, c: C) -> Weight {
        Weight(self.0.iter().map(|x| x * c).collect())
    }

    /// λ_i − λ_j.
    pub fn diff(&self, i: usize, j: usize) -> C {
        self.0[i] - self.0[j]
    }
}

fn zip_with(a: &Weight, b: &Weight, f: impl Fn(C, C) -> C) -> Weight {
    assert_eq!(a.len(), b.len(), "weight length mismatch");
    Weight(a.0.iter().zip(&b.0).map(|(x, y)| f(*x, *y)).collect())
}

impl Add for &Weight {
    type Output = Weight;
    fn add(self, rhs: &Weight) -> Weight {
        zip_with(self, rhs, |x, y| x + y)
    }
}

impl Sub for &Weight {
    type Output = Weight;
    fn sub(self, rhs: &Weight) -> Weight {
        zip_with(self, rhs, |x, y| x - y)
    }
}

impl Neg for &Weight {
    type Output = Weight;
    fn neg(self) -> Weight {
        Weight(self.0.iter().map(|x| -x).collect())
    }
}

impl Mul<C> for &Weight {
    type Output = Weight;
    fn mul(self, c: C) -> Weight {
        self.scale(c)
    }
}

fn check_index(m: usize, n: usize) -> Result<()> {
    if m > n {
        Err(Error::IndexOutOfRange { index: m, n })
    } else {
        Ok(())
    }
}

/// μ_m = (−1,…,−1, n, −1,…,−1)/(n+1), distinguished coordinate at position m.
pub fn weight_mu(m: usize, n: usize) -> Result<Weight> {
    check_index(m, n)?;
    let d = (n + 1) as f64;
    let mut v = vec![C::new(-1.0 / d, 0.0); n + 1];
    v[m] = C::new(n as f64 / d, 0.0);
    Ok(Weight(v))
}

/// ρ = Σ ω_i = (n/2)(1,…,1) − (0,1,…,n).
pub fn rho(n: usize) -> Weight {
    Weight((0..=n).map(|i| C::new(n as f64 / 2.0 - i as f64, 0.0)).collect())
}

/// Fundamental weight ω_i (1 ≤ i ≤ n): the first i coordinates are (n+1−i)/(n+1), the rest −i/(n+1).
pub fn omega(i: usize, n: usize) -> Result<Weight> {
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let d = (n + 1) as f64;
    Ok(Weight(
        (0..=n)
            .map(|c| {
                if c < i {
                    C::new((n + 1 - i) as f64 / d, 0.0)
                } else {
                    C::new(-(i as f64) / d, 0.0)
                }
            })
            .collect(),
    ))
}

/// Simple coroot h_i = e_{i−1} − e_i (1 ≤ i ≤ n), normalized so that ⟨h_i, h_i⟩ = 2.
pub fn simple_root(i: usize, n: usize) -> Result<Weight> {
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let mut v = vec![C::new(0.0, 0.0); n + 1];
    v[i - 1] = C::new(1.0, 0.0);
    v[i] = C::new(-1.0, 0.0);
    Ok(Weight(v))
}

/// ⟨a, b⟩ = Σ a_i b_i (bilinear, not conjugated).
pub fn inner(a: &Weight, b: &Weight) -> Result<C> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum())
}

fn check_lambda(lambda: &Weight, params: &ModelParams) -> Result<()> {
    if lambda.len() != params.dim() {
        Err(Error::LengthMismatch(lambda.len(), params.dim()))
    } else {
        Ok(())
    }
}

/// (λ+ρ)_{l,m} = ⟨λ+ρ, μ_l − μ_m⟩ = (λ_l − λ_m) + (m − l).
pub fn shifted_diff(lambda: &Weight, l: usize, m: usize, n: usize) -> Result<C> {
    check_index(l, n)?;
    check_index(m, n)?;
    let lr = lambda + &rho(n);
    inner(&lr, &(&weight_mu(l, n)? - &weight_mu(m, n)?))
}

/// ϖ = ⟨λ+ρ, μ_l − μ_m⟩/(2κ).
pub fn varpi(lambda: &Weight, m: usize, l: usize, params: &ModelParams) -> Result<C> {
    check_lambda(lambda, params)?;
    if m == l {
        return Err(Error::DomainError("varpi needs m != l".into()));
    }
    Ok(shifted_diff(lambda, l, m, params.n())? / (2.0 * params.kappa()))
}

/// Conformal dimension Δ_k(λ) = ⟨λ, λ+2ρ⟩/(2κ).
pub fn delta_conformal(lambda: &Weight, params: &ModelParams) -> Result<C> {
    check_lambda(lambda, params)?;
    if params.kappa().norm() == 0.0 {
        return Err(Error::ZeroKappa);
    }
    let two_rho = rho(params.n()).scale(C::new(2.0, 0.0));
    Ok(inner(lambda, &(lambda + &two_rho))? / (2.0 * params.kappa()))
}

/// The pair (Δ₁, Δ₂) for the vector v_i ⊗ v_j in V_{m,l} (`j` is the second tensor slot):
/// Δ₁ = Δ_k(λ−μ_j) − Δ_k(λ−μ_m−μ_l), Δ₂ = Δ_k(λ) − Δ_k(λ−μ_j).
pub fn delta_pair(lambda: &Weight, m: usize, l: usize, j: usize, params: &ModelParams) -> Result<(C, C)> {
    let n = params.n();
    check_index(m, n)?;
    check_index(l, n)?;
    if j != m && j != l {
        return Err(Error::DomainError(format!("slot weight index {j} not in {{{m}, {l}}}")));
    }
    let mu_j = weight_mu(j, n)?;
    let mu_ml = &weight_mu(m, n)? + &weight_mu(l, n)?;
    let after_j = lambda - &mu_j;
    let d1 = delta_conformal(&after_j, params)? - delta_conformal(&(lambda - &mu_ml), params)?;
    let d2 = delta_conformal(lambda, params)? - delta_conformal(&after_j, params)?;
    Ok((d1, d2))
}

/// Δ = Δ₁ + Δ₂ = ⟨2λ − (μ_m+μ_l) + 2ρ, μ_m+μ_l⟩/(2κ).
pub fn delta_total(lambda: &Weight, m: usize, l: usize, params: &ModelParams) -> Result<C> {
    check_lambda(lambda, params)?;
    let n = params.n();
    let mu_ml = &weight_mu(m, n)? + &weight_mu(l, n)?;
    let two = C::new(2.0, 0.0);
    let v = &(&lambda.scale(two) - &mu_ml) + &rho(n).scale(two);
    Ok(inner(&v, &mu_ml)? / (2.0 * params.kappa()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C {
        C::new(x, 0.0)
    }

    fn close(a: C, b: C) -> bool {
        (a - b).norm() < 1e-13
    }

    fn sample_lambda(n: usize) -> Weight {
        Weight((0..=n).map(|i| C::new(0.3 * i as f64 - 0.41, 0.07 * (i as f64 + 1.0))).collect())
    }

    #[test]
    fn mu_zero_is_first_fundamental_weight() {
        for n in 1..6 {
            assert_eq!(weight_mu(0, n).unwrap(), omega(1, n).unwrap());
            assert_eq!(weight_mu(n, n).unwrap(), -&omega(n, n).unwrap());
        }
    }

    #[test]
    fn mu_sum_vanishes_and_inner_products() {
        for n in 1..6 {
            let mut s = Weight::zero(n);
            for m in 0..=n {
                s = &s + &weight_mu(m, n).unwrap();
            }
            assert!(s.0.iter().all(|x| x.norm() < 1e-15));
            let d = (n + 1) as f64;
            for m in 0..=n {
                let mm = weight_mu(m, n).unwrap();
                assert!(close(inner(&mm, &mm).unwrap(), c(n as f64 / d)));
                for l in 0..=n {
                    if l == m {
                        continue;
                    }
                    let ll = weight_mu(l, n).unwrap();
                    assert!(close(inner(&mm, &ll).unwrap(), c(-1.0 / d)));
                    let dif = &mm - &ll;
                    assert!(close(inner(&dif, &dif).unwrap(), c(2.0)));
                    let sum = &mm + &ll;
                    assert!(close(inner(&sum, &(&ll - &mm)).unwrap(), c(0.0)));
                    assert!(close(inner(&sum, &sum).unwrap(), c(2.0 * (n as f64 - 1.0) / d)));
                }
            }
        }
        assert!(weight_mu(3, 2).is_err());
    }

    #[test]
    fn rho_and_fundamental_weights() {
        assert_eq!(rho(1), Weight::from_reals(&[0.5, -0.5]));
        for n in 1..6 {
            let mut s = Weight::zero(n);
            for i in 1..=n {
                s = &s + &omega(i, n).unwrap();
            }
            assert!((&s - &rho(n)).0.iter().all(|x| x.norm() < 1e-14));
            for i in 1..=n {
                for j in 1..=n {
                    let v = inner(&omega(i, n).unwrap(), &simple_root(j, n).unwrap()).unwrap();
                    assert!(close(v, c(if i == j { 1.0 } else { 0.0 })));
                }
            }
            let w1 = omega(1, n).unwrap();
            assert!(close(inner(&w1, &w1).unwrap(), c(n as f64 / (n as f64 + 1.0))));
            for m in 0..=n {
                for l in (m + 1)..=n {
                    let v = inner(&rho(n), &(&weight_mu(m, n).unwrap() - &weight_mu(l, n).unwrap())).unwrap();
                    assert!(close(v, c((l - m) as f64)));
                }
            }
        }
    }

    #[test]
    fn inner_errors_and_zero() {
        let a = Weight::zero(2);
        let b = sample_lambda(2);
        assert_eq!(inner(&a, &b).unwrap(), c(0.0));
        assert_eq!(inner(&a, &sample_lambda(3)), Err(Error::LengthMismatch(3, 4)));
    }

    #[test]
    fn varpi_rank_one_formula_and_antisymmetry() {
        let params = ModelParams::new(1, c(0.6), C::new(-1.7, 0.1)).unwrap();
        let lam = Weight(vec![C::new(0.3, 0.1), C::new(-0.45, 0.02)]);
        let v = varpi(&lam, 0, 1, &params).unwrap();
        let expect = (lam.0[1] - lam.0[0] - 1.0) / (2.0 * params.kappa());
        assert!(close(v, expect));
        assert!(close(v + varpi(&lam, 1, 0, &params).unwrap(), c(0.0)));
    }

    #[test]
    fn varpi_shift_invariance() {
        let params = ModelParams::new(3, c(0.5), c(-1.3)).unwrap();
        let lam = sample_lambda(3);
        let shifted = Weight(lam.0.iter().map(|x| x + C::new(0.77, -0.3)).collect());
        for m in 0..4 {
            for l in 0..4 {
                if m != l {
                    assert!(close(varpi(&lam, m, l, &params).unwrap(), varpi(&shifted, m, l, &params).unwrap()));
                }
            }
        }
    }

    #[test]
    fn deltas() {
        let params = ModelParams::new(3, c(0.55), c(-1.9)).unwrap();
        assert_eq!(delta_conformal(&Weight::zero(3), &params).unwrap(), c(0.0));
        let lam = sample_lambda(3);
        let n = 3;
        for m in 0..=n {
            for l in (m + 1)..=n {
                let vp = varpi(&lam, m, l, &params).unwrap();
                let mml = inner(&weight_mu(m, n).unwrap(), &weight_mu(l, n).unwrap()).unwrap() / (2.0 * params.kappa());
                for (j, sign) in [(l, 1.0), (m, -1.0)] {
                    let (d1, d2) = delta_pair(&lam, m, l, j, &params).unwrap();
                    assert!(close(d1 + d2, delta_total(&lam, m, l, &params).unwrap()));
                    assert!(close(-(d1 - d2) / 2.0, sign * vp + mml));
                }
            }
        }
    }

    #[test]
    fn derived_parameters() {
        let params = ModelParams::new(2, C::new(0.5, 0.2), C::new(-1.5, 0.05)).unwrap();
        let tau = params.tau();
        assert!((tau - (-params.kappa() * params.ln_q() / PI_I)).norm() < 1e-15);
        assert!((params.gamma() + tau / params.kappa()).norm() < 1e-15);
        assert!((params.p_pow(c(-0.5) / params.kappa()) - params.q()).norm() < 1e-14);
        assert!(params.tau().im > 0.0);
        assert!(matches!(ModelParams::new(1, c(1.5), c(-1.0)), Err(Error::RegionViolation(_))));
        assert!(matches!(ModelParams::new(1, c(0.5), c(1.0)), Err(Error::RegionViolation(_))));
        assert_eq!(ModelParams::new(1, c(0.5), c(0.0)), Err(Error::ZeroKappa));
        assert_eq!(params.level(), params.kappa() - 3.0);
    }
}
