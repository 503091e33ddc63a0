//! Connection coefficients of Heine's function, the exchange matrix R_k(u,λ) of the
//! vector representation and its scalar prefactor χ(u,τ,γ).
//!
//! Spectral variables follow z = e^{−2πiu}, p = e^{2πiτ}, q = e^{πiγ}.
//! On the weight space V_{m,l} (m < l) the exchange matrix acts by
//! v_m⊗v_l ↦ α^{m,l} v_m⊗v_l + β^{m,l} v_l⊗v_m and
//! v_l⊗v_m ↦ β^{l,m} v_m⊗v_l + α^{l,m} v_l⊗v_m.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, OperatorVV};
use crate::qkz::{continue_2phi1, h_scalar};
use crate::specfun::{
    cpower, double_pochhammer, egamma, qgamma, theta, theta1, QBase, SpecialValue, TruncationPolicy, C, TWO_PI_I,
};
use crate::trig::f_scalar;
use crate::weights::{shifted_diff, varpi, ModelParams, Weight};

const ONE: C = C::new(1.0, 0.0);

/// z = e^{−2πiu}.
pub fn z_of_u(u: C) -> C {
    (-TWO_PI_I * u).exp()
}

fn gamma_p(a: C, base: &QBase, policy: &TruncationPolicy) -> Result<C> {
    Ok(qgamma(a, base, policy)?.value)
}

fn ratio(num: C, den: C, what: &str, policy: &TruncationPolicy) -> Result<C> {
    policy.guard(what, den)?;
    Ok(num / den)
}

/// Λ(z) and Ω(z) of the connection formula
/// ₂φ₁(p^r,p^s,p^t;p,z) = Λ(z)g₁(z) + Ω(z)g₂(z), with z given by its logarithm.
pub fn connection_coeffs_log(
    r: C,
    s: C,
    t: C,
    base: &QBase,
    ln_z: C,
    policy: &TruncationPolicy,
) -> Result<(C, C)> {
    let p = base.value();
    let z = ln_z.exp();
    let th_z = theta(z, p, policy)?.value;
    policy.guard("connection: Theta(z;p)", th_z)?;
    let g = |a: C| gamma_p(a, base, policy);
    let lam_const = ratio(g(t)? * g(s - r)?, g(s)? * g(t - r)?, "connection: Gamma_p(s)Gamma_p(t-r)", policy)?;
    let om_const = ratio(g(t)? * g(r - s)?, g(r)? * g(t - s)?, "connection: Gamma_p(r)Gamma_p(t-s)", policy)?;
    let lam = lam_const * theta(z * base.pow(r), p, policy)?.value / th_z * (r * ln_z).exp();
    let om = om_const * theta(z * base.pow(s), p, policy)?.value / th_z * (s * ln_z).exp();
    Ok((lam, om))
}

/// Λ(z) and Ω(z) with the principal branch of z^r, z^s.
pub fn connection_coeffs(r: C, s: C, t: C, base: &QBase, z: C, policy: &TruncationPolicy) -> Result<(C, C)> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("connection coefficients"));
    }
    connection_coeffs_log(r, s, t, base, z.ln(), policy)
}

/// g₁(z) = z^{−r} ₂φ₁(p^r, p^{r−t+1}, p^{r−s+1}; p, p^{t+1−r−s}/z).
pub fn connection_g1(r: C, s: C, t: C, base: &QBase, z: C, policy: &TruncationPolicy) -> Result<C> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("g1"));
    }
    let x = base.pow(t + ONE - r - s) / z;
    let f = continue_2phi1(r, r - t + ONE, r - s + ONE, base, x, policy)?;
    Ok(cpower(z, -r)? * f.value)
}

/// g₂(z) = z^{−s} ₂φ₁(p^{s−t+1}, p^s, p^{s−r+1}; p, p^{t+1−r−s}/z).
pub fn connection_g2(r: C, s: C, t: C, base: &QBase, z: C, policy: &TruncationPolicy) -> Result<C> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("g2"));
    }
    let x = base.pow(t + ONE - r - s) / z;
    let f = continue_2phi1(s - t + ONE, s, s - r + ONE, base, x, policy)?;
    Ok(cpower(z, -s)? * f.value)
}

/// Both sides of the connection formula at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionCheck {
    /// ₂φ₁ continued to z along the three-term recurrence.
    pub direct: C,
    pub lambda: C,
    pub omega: C,
    pub g1: C,
    pub g2: C,
    /// |direct − Λg₁ − Ωg₂| / max(1, |direct|).
    pub residual: f64,
}

pub fn connection_residual(
    r: C,
    s: C,
    t: C,
    base: &QBase,
    z: C,
    policy: &TruncationPolicy,
) -> Result<ConnectionCheck> {
    let direct = continue_2phi1(r, s, t, base, z, policy)?.value;
    let (lambda, omega) = connection_coeffs(r, s, t, base, z, policy)?;
    let g1 = connection_g1(r, s, t, base, z, policy)?;
    let g2 = connection_g2(r, s, t, base, z, policy)?;
    let residual = (direct - lambda * g1 - omega * g2).norm() / direct.norm().max(1.0);
    Ok(ConnectionCheck {
        direct,
        lambda,
        omega,
        g1,
        g2,
        residual,
    })
}

/// The four off-diagonal coefficients of the exchange matrix on V_{m,l}, m < l.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeEntryData {
    pub m: usize,
    pub l: usize,
    pub alpha_ml: C,
    pub alpha_lm: C,
    pub beta_ml: C,
    pub beta_lm: C,
    pub sigma_lm: C,
    pub varpi: C,
}

impl ExchangeEntryData {
    /// (α^{m,l}, α^{l,m}, β^{m,l}, β^{l,m}).
    pub fn entries(&self) -> [C; 4] {
        [self.alpha_ml, self.alpha_lm, self.beta_ml, self.beta_lm]
    }

    /// Largest entrywise difference, each scaled by max(1, |a|, |b|).
    pub fn max_diff(&self, other: &ExchangeEntryData) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries().iter())
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(1.0))
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference of the β pair only.
    pub fn beta_diff(&self, other: &ExchangeEntryData) -> f64 {
        [(self.beta_ml, other.beta_ml), (self.beta_lm, other.beta_lm)]
            .iter()
            .map(|(a, b)| (a - b).norm() / a.norm().max(b.norm()).max(1.0))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|e| e.norm()).fold(0.0, f64::max)
    }
}

/// The printed forms of the exchange-matrix coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryRoute {
    /// Γ_p/Θ products read off the twisted exchange matrix.
    GammaTheta,
    /// Connection coefficients Λ, Ω of the checked expectation values.
    Monodromy,
    /// Θ-only forms (β exactly, α up to σ).
    ThetaOnly,
    /// ϑ₁ ratios written with 2ϖτ and τ/κ.
    Theta1Shifted,
    /// α(u, γ(λ+ρ)_{m,l}), β(u, γ(λ+ρ)_{m,l}) of the closed formula.
    Closed,
}

impl EntryRoute {
    pub const ALL: [EntryRoute; 5] = [
        EntryRoute::GammaTheta,
        EntryRoute::Monodromy,
        EntryRoute::ThetaOnly,
        EntryRoute::Theta1Shifted,
        EntryRoute::Closed,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EntryRoute::GammaTheta => "gamma-theta",
            EntryRoute::Monodromy => "monodromy",
            EntryRoute::ThetaOnly => "theta-only",
            EntryRoute::Theta1Shifted => "theta1-shifted",
            EntryRoute::Closed => "closed",
        }
    }
}

/// How the argument of σ is spelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaSpelling {
    /// x = 2ϖ.
    Varpi,
    /// x = (λ+ρ)_{l,m}/κ.
    ShiftedWeight,
}

/// σ_{a,b}(λ,k). For a > b this is q Γ_p(1+x+1/κ)Γ_p(−x)/(Γ_p(1+x)Γ_p(−x+1/κ)) with
/// x the argument of the pair (m,l) = (b,a); for a < b the reciprocal.
pub fn sigma_coeff(
    lambda: &Weight,
    a: usize,
    b: usize,
    spelling: SigmaSpelling,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<C> {
    if a == b {
        return Err(Error::DomainError("sigma needs distinct indices".into()));
    }
    let (m, l) = if a < b { (a, b) } else { (b, a) };
    let x = match spelling {
        SigmaSpelling::Varpi => 2.0 * varpi(lambda, m, l, params)?,
        SigmaSpelling::ShiftedWeight => shifted_diff(lambda, l, m, params.n())? / params.kappa(),
    };
    let base = params.p_base();
    let ik = ONE / params.kappa();
    let g = |a: C| gamma_p(a, &base, policy);
    let num = params.q() * g(ONE + x + ik)? * g(-x)?;
    let den = g(ONE + x)? * g(-x + ik)?;
    let s_lm = ratio(num, den, "sigma: Gamma_p(1+x)Gamma_p(-x+1/kappa)", policy)?;
    if a > b {
        Ok(s_lm)
    } else {
        ratio(ONE, s_lm, "sigma: reciprocal", policy)
    }
}

/// α(u,L) = ϑ₁(L+γ)ϑ₁(u)/(ϑ₁(L)ϑ₁(u−γ)).
pub fn elliptic_alpha(u: C, big_l: C, gamma: C, tau: C, policy: &TruncationPolicy) -> Result<C> {
    let th = |x: C| theta1(x, tau, policy).map(|v| v.value);
    let den = th(big_l)? * th(u - gamma)?;
    ratio(th(big_l + gamma)? * th(u)?, den, "alpha: theta1(L)theta1(u-gamma)", policy)
}

/// β(u,L) = ϑ₁(γ)ϑ₁(u−L)/(ϑ₁(L)ϑ₁(u−γ)).
pub fn elliptic_beta(u: C, big_l: C, gamma: C, tau: C, policy: &TruncationPolicy) -> Result<C> {
    let th = |x: C| theta1(x, tau, policy).map(|v| v.value);
    let den = th(big_l)? * th(u - gamma)?;
    ratio(th(gamma)? * th(u - big_l)?, den, "beta: theta1(L)theta1(u-gamma)", policy)
}

struct PairData {
    vp: C,
    ik: C,
    eps: C,
    eps1: C,
    eps2: C,
}

fn pair_data(lambda: &Weight, m: usize, l: usize, params: &ModelParams, policy: &TruncationPolicy) -> Result<PairData> {
    if m >= l {
        return Err(Error::DomainError(format!("exchange entries need m < l, got ({m},{l})")));
    }
    if l > params.n() {
        return Err(Error::IndexOutOfRange { index: l, n: params.n() });
    }
    let vp = varpi(lambda, m, l, params)?;
    let q = params.q();
    let pb = params.p_base();
    let eps = ratio(q - ONE / q, ONE - pb.pow(-(2.0 * vp + 1.0)), "epsilon: 1 - p^{-(2 varpi+1)}", policy)?;
    let eps1 = ratio(q * (q - ONE / q), pb.pow(-2.0 * vp) - ONE, "check-epsilon_1: p^{-2 varpi} - 1", policy)?;
    Ok(PairData {
        vp,
        ik: ONE / params.kappa(),
        eps,
        eps1,
        eps2: q,
    })
}

/// Coefficients of the exchange matrix on V_{m,l} (m < l) at spectral parameter u,
/// computed along the chosen route.
pub fn exchange_entries(
    route: EntryRoute,
    u: C,
    lambda: &Weight,
    m: usize,
    l: usize,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<ExchangeEntryData> {
    let d = pair_data(lambda, m, l, params, policy)?;
    let z = z_of_u(u);
    let sigma_lm = sigma_coeff(
        lambda,
        l,
        m,
        if route == EntryRoute::Closed {
            SigmaSpelling::ShiftedWeight
        } else {
            SigmaSpelling::Varpi
        },
        params,
        policy,
    )?;
    let sigma_ml = ratio(ONE, sigma_lm, "sigma: reciprocal", policy)?;
    let (alpha_ml, alpha_lm, beta_ml, beta_lm) = match route {
        EntryRoute::GammaTheta => gamma_theta_entries(z, &d, params, policy)?,
        EntryRoute::Monodromy => monodromy_entries(z, &d, params, policy)?,
        EntryRoute::ThetaOnly => {
            let p = params.p();
            let pb = params.p_base();
            let q2 = params.q() * params.q();
            let th = |x: C| theta(x, p, policy).map(|v| v.value);
            let pm = pb.pow(-2.0 * d.vp);
            let den = th(pm)? * th(z * q2)?;
            policy.guard("theta-only: Theta(p^{-2 varpi})Theta(zq^2)", den)?;
            let beta_ml = -pm * th(q2)? * th(z * pb.pow(2.0 * d.vp))? / den;
            let beta_lm = th(q2)? * th(z * pm)? / den;
            let alpha_ml = sigma_ml * q2 * th(pm / q2)? * th(z)? / den;
            let alpha_lm = sigma_lm * th(pm * q2)? * th(z)? / den;
            (alpha_ml, alpha_lm, beta_ml, beta_lm)
        }
        EntryRoute::Theta1Shifted => {
            let tau = params.tau();
            let a = tau * d.ik;
            let big_l = 2.0 * d.vp * tau;
            let th = |x: C| theta1(x, tau, policy).map(|v| v.value);
            let tu = th(u + a)?;
            policy.guard("theta1: theta1(u + tau/kappa)", tu)?;
            let (tl, tml) = (th(big_l)?, th(-big_l)?);
            policy.guard("theta1: theta1(2 varpi tau)", tl)?;
            let alpha_ml = sigma_ml * th(big_l - a)? / tl * th(u)? / tu;
            let alpha_lm = sigma_lm * th(-big_l - a)? / tml * th(u)? / tu;
            let beta_ml = th(-a)? / tl * th(u - big_l)? / tu;
            let beta_lm = th(-a)? / tml * th(u + big_l)? / tu;
            (alpha_ml, alpha_lm, beta_ml, beta_lm)
        }
        EntryRoute::Closed => {
            let (gamma, tau) = (params.gamma(), params.tau());
            let big_l = gamma * shifted_diff(lambda, m, l, params.n())?;
            (
                sigma_ml * elliptic_alpha(u, big_l, gamma, tau, policy)?,
                sigma_lm * elliptic_alpha(u, -big_l, gamma, tau, policy)?,
                elliptic_beta(u, big_l, gamma, tau, policy)?,
                elliptic_beta(u, -big_l, gamma, tau, policy)?,
            )
        }
    };
    Ok(ExchangeEntryData {
        m,
        l,
        alpha_ml,
        alpha_lm,
        beta_ml,
        beta_lm,
        sigma_lm,
        varpi: d.vp,
    })
}

fn gamma_theta_entries(z: C, d: &PairData, params: &ModelParams, policy: &TruncationPolicy) -> Result<(C, C, C, C)> {
    let base = params.p_base();
    let p = params.p();
    let q2 = params.q() * params.q();
    let g = |a: C| gamma_p(a, &base, policy);
    let th = |x: C| theta(x, p, policy).map(|v| v.value);
    let (v2, ik) = (2.0 * d.vp, d.ik);
    let tq = th(z * q2)?;
    policy.guard("exchange: Theta(zq^2)", tq)?;
    let c_aml = ratio(g(ONE + v2)? * g(ONE + v2)?, g(v2 + ONE + ik)? * g(v2 + ONE - ik)?, "alpha^{m,l} gammas", policy)?;
    let c_alm = ratio(g(ONE - v2)? * g(-ONE - v2)?, g(-v2 + ik)? * g(-v2 - ik)?, "alpha^{l,m} gammas", policy)?;
    let c_bml = ratio(g(ONE + v2)? * g(-ONE - v2)?, g(ik)? * g(-ik)?, "beta^{m,l} gammas", policy)?;
    let c_blm = ratio(g(ONE - v2)? * g(ONE + v2)?, g(ONE + ik)? * g(ONE - ik)?, "beta^{l,m} gammas", policy)?;
    let alpha_ml = c_aml * th(z)? / tq * d.eps2;
    let alpha_lm = c_alm * th(z * p)? / tq * d.eps1 * z / d.eps;
    let beta_ml = c_bml * th(z * base.pow(ONE + v2))? / tq * d.eps2 * z / d.eps;
    let beta_lm = c_blm * th(z * base.pow(-v2))? / tq * d.eps1;
    Ok((alpha_ml, alpha_lm, beta_ml, beta_lm))
}

/// Heine parameters of the checked expectation values J̌₁^{(1)}, J̌₁^{(2)} in w = q²z.
fn checked_heine(d: &PairData) -> [(C, C, C); 2] {
    let v2 = 2.0 * d.vp;
    [
        (ONE + d.ik, -v2 + d.ik, -v2 + ONE),
        (d.ik, ONE + v2 + d.ik, v2 + ONE),
    ]
}

fn monodromy_entries(z: C, d: &PairData, params: &ModelParams, policy: &TruncationPolicy) -> Result<(C, C, C, C)> {
    let base = params.p_base();
    let q2 = params.q() * params.q();
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("exchange entries"));
    }
    let ln_w = q2.ln() + z.ln();
    let [(r1, s1, t1), (r2, s2, t2)] = checked_heine(d);
    // J̌₁^{(1)}: g₁ ↦ (z/ε) J₁^{(2)}, g₂ ↦ J₁^{(1)}
    let (lam1, om1) = connection_coeffs_log(r1, s1, t1, &base, ln_w, policy)?;
    let beta_lm = d.eps1 * om1 * (-s1 * ln_w).exp();
    let alpha_lm = d.eps1 * lam1 * (-r1 * ln_w).exp() * z / d.eps;
    // J̌₁^{(2)}: g₁ ↦ J₁^{(1)}, g₂ ↦ (z/ε) J₁^{(2)}
    let (lam2, om2) = connection_coeffs_log(r2, s2, t2, &base, ln_w, policy)?;
    let alpha_ml = d.eps2 * lam2 * (-r2 * ln_w).exp();
    let beta_ml = d.eps2 * om2 * (-s2 * ln_w).exp() * z / d.eps;
    Ok((alpha_ml, alpha_lm, beta_ml, beta_lm))
}

/// Residual of writing the checked expectation values through the fusion ones,
/// J̌₁^{(1)} = β^{l,m}J₁^{(1)} + α^{l,m}J₁^{(2)} and J̌₁^{(2)} = α^{m,l}J₁^{(1)} + β^{m,l}J₁^{(2)},
/// with the coefficients from the monodromy route. Both sides are summed independently:
/// the left side as a series in q²z, the right side in p^{1−1/κ}/z.
pub fn checked_expansion_residual(
    u: C,
    lambda: &Weight,
    m: usize,
    l: usize,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let d = pair_data(lambda, m, l, params, policy)?;
    let base = params.p_base();
    let z = z_of_u(u);
    let q2 = params.q() * params.q();
    let e = exchange_entries(EntryRoute::Monodromy, u, lambda, m, l, params, policy)?;
    let [(r1, s1, t1), (r2, s2, t2)] = checked_heine(&d);
    let jc1 = d.eps1 * continue_2phi1(r1, s1, t1, &base, q2 * z, policy)?.value;
    let jc2 = d.eps2 * continue_2phi1(r2, s2, t2, &base, q2 * z, policy)?.value;
    let x = base.pow(ONE - d.ik) / z;
    let v2 = 2.0 * d.vp;
    let j1 = continue_2phi1(d.ik, -v2 + d.ik, -v2, &base, x, policy)?.value;
    let j2 = d.eps / z * continue_2phi1(ONE + d.ik, ONE + v2 + d.ik, v2 + 2.0, &base, x, policy)?.value;
    let r1 = (jc1 - e.beta_lm * j1 - e.alpha_lm * j2).norm() / jc1.norm().max(1.0);
    let r2 = (jc2 - e.alpha_ml * j1 - e.beta_ml * j2).norm() / jc2.norm().max(1.0);
    Ok(r1.max(r2))
}

/// h(z)/h(z⁻¹).
pub fn h_ratio(z: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let a = h_scalar(z, params, policy)?;
    let b = h_scalar(z.inv(), params, policy)?;
    policy.guard("h(1/z)", b.value)?;
    let v = a.value / b.value;
    Ok(SpecialValue {
        value: v,
        est_error: v.norm() * (a.est_error / a.value.norm() + b.est_error / b.value.norm()),
        terms_used: a.terms_used.max(b.terms_used),
    })
}

/// The twisted unitary exchange matrix B̌_k(z,λ) on V_{m,l}: for m < l the 2×2 matrix
/// h(z)/h(z⁻¹)·[[β^{l,m}, α^{m,l}], [α^{l,m}, β^{m,l}]] on the basis (v_m⊗v_l, v_l⊗v_m),
/// with coefficients from the connection formula; for m = l the 1×1 matrix h(z)/h(z⁻¹).
pub fn bcheck_matrix(
    z: C,
    lambda: &Weight,
    m: usize,
    l: usize,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<CMatrix> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("bcheck"));
    }
    let hr = h_ratio(z, params, policy)?.value;
    if m == l {
        if m > params.n() {
            return Err(Error::IndexOutOfRange { index: m, n: params.n() });
        }
        return Ok(CMatrix::diagonal(&[hr]));
    }
    let d = pair_data(lambda, m, l, params, policy)?;
    let (a_ml, a_lm, b_ml, b_lm) = monodromy_entries(z, &d, params, policy)?;
    let mut out = CMatrix::zeros(2);
    out[(0, 0)] = hr * b_lm;
    out[(0, 1)] = hr * a_ml;
    out[(1, 0)] = hr * a_lm;
    out[(1, 1)] = hr * b_ml;
    Ok(out)
}

/// Σ E_mm⊗E_mm + Σ α E_mm⊗E_ll + β E_lm⊗E_ml from per-pair coefficients.
pub fn assemble_exchange(n: usize, entries: &[ExchangeEntryData]) -> OperatorVV {
    let mut op = OperatorVV::zeros(n);
    for m in 0..=n {
        op.set((m, m), (m, m), ONE);
    }
    for e in entries {
        let (m, l) = (e.m, e.l);
        op.set((m, l), (m, l), e.alpha_ml);
        op.set((l, m), (m, l), e.beta_ml);
        op.set((l, m), (l, m), e.alpha_lm);
        op.set((m, l), (l, m), e.beta_lm);
    }
    op
}

/// Coefficients for every pair m < l along one route.
pub fn all_entries(
    route: EntryRoute,
    u: C,
    lambda: &Weight,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<Vec<ExchangeEntryData>> {
    let n = params.n();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for m in 0..=n {
        for l in m + 1..=n {
            out.push(exchange_entries(route, u, lambda, m, l, params, policy)?);
        }
    }
    Ok(out)
}

/// The exchange matrix divided by χ: unit diagonal on V_{m,m}, α and β elsewhere.
pub fn exchange_reduced(
    route: EntryRoute,
    u: C,
    lambda: &Weight,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<OperatorVV> {
    Ok(assemble_exchange(params.n(), &all_entries(route, u, lambda, params, policy)?))
}

/// R_k(u,λ) in closed form: χ (elliptic-gamma route) times the ϑ₁ matrix.
pub fn exchange_rmatrix(u: C, lambda: &Weight, params: &ModelParams, policy: &TruncationPolicy) -> Result<OperatorVV> {
    let c = chi_egamma(u, params, policy)?.value;
    Ok(exchange_reduced(EntryRoute::Closed, u, lambda, params, policy)?.scale(c))
}

/// R_k(u,λ) = f(z⁻¹)B_k(z,λ) assembled from the twisted exchange matrices: the scalar
/// f(z⁻¹)h(z)/h(z⁻¹) from the products, the coefficients from the connection formula.
pub fn exchange_rmatrix_monodromy(
    u: C,
    lambda: &Weight,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<OperatorVV> {
    let c = chi_products(u, params, policy)?.value;
    Ok(exchange_reduced(EntryRoute::Monodromy, u, lambda, params, policy)?.scale(c))
}

/// The unitary exchange matrix B_k(z,λ) = h(z)/h(z⁻¹)·(closed-form matrix).
pub fn unitary_exchange(u: C, lambda: &Weight, params: &ModelParams, policy: &TruncationPolicy) -> Result<OperatorVV> {
    let hr = h_ratio(z_of_u(u), params, policy)?.value;
    Ok(exchange_reduced(EntryRoute::Closed, u, lambda, params, policy)?.scale(hr))
}

/// sup |B^{21}(z,λ)B(z⁻¹,λ) − 1| with B^{21} = P B P.
pub fn unitarity_residual(u: C, lambda: &Weight, params: &ModelParams, policy: &TruncationPolicy) -> Result<f64> {
    let n = params.n();
    let flip = OperatorVV::flip(n);
    let b = unitary_exchange(u, lambda, params, policy)?;
    let b_inv = unitary_exchange(-u, lambda, params, policy)?;
    let lhs = flip.compose(&b).compose(&flip).compose(&b_inv);
    Ok(lhs.matrix().sup_diff(OperatorVV::identity(n).matrix()))
}

/// One factor P_i of χ = q^{n/(n+1)}P₁P₂P₃P₄, as a lattice product and as its
/// elliptic-gamma form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiFactor {
    pub lattice: SpecialValue,
    pub egamma: SpecialValue,
}

impl ChiFactor {
    pub fn difference(&self) -> f64 {
        (self.lattice.value - self.egamma.value).norm() / self.lattice.value.norm().max(1.0)
    }
}

/// χ(u,τ,γ) along its routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiValue {
    /// f(z⁻¹)h(z)/h(z⁻¹).
    pub via_products: SpecialValue,
    /// q^{n/(n+1)}Γ_e(−u+τ)Γ_e(u+γ)/(Γ_e(−u+τ+γ)Γ_e(u)), all with periods ((n+1)γ, τ).
    pub via_egamma: SpecialValue,
    /// q^{n/(n+1)}P₁P₂P₃P₄ from the lattice products.
    pub via_lattice: C,
    pub factors: [ChiFactor; 4],
    /// |via_products − via_egamma| / max(1, |via_products|).
    pub difference: f64,
}

fn prefactor(params: &ModelParams) -> Result<C> {
    let n = params.n() as f64;
    cpower(params.q(), C::new(n / (n + 1.0), 0.0))
}

fn quotient(a: SpecialValue, b: SpecialValue, what: &str, policy: &TruncationPolicy) -> Result<SpecialValue> {
    policy.guard(what, b.value)?;
    let v = a.value / b.value;
    Ok(SpecialValue {
        value: v,
        est_error: v.norm() * (a.est_error / a.value.norm().max(f64::MIN_POSITIVE) + b.est_error / b.value.norm()),
        terms_used: a.terms_used.max(b.terms_used),
    })
}

fn inverse(a: SpecialValue, what: &str, policy: &TruncationPolicy) -> Result<SpecialValue> {
    quotient(SpecialValue { value: ONE, est_error: 0.0, terms_used: 0 }, a, what, policy)
}

/// χ = f(z⁻¹)h(z)/h(z⁻¹).
pub fn chi_products(u: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let z = z_of_u(u);
    let f = f_scalar(z.inv(), params.n(), params.q(), policy)?;
    let hr = h_ratio(z, params, policy)?;
    let v = f.value * hr.value;
    Ok(SpecialValue {
        value: v,
        est_error: v.norm() * (f.est_error / f.value.norm().max(f64::MIN_POSITIVE) + hr.est_error / hr.value.norm()),
        terms_used: f.terms_used.max(hr.terms_used),
    })
}

fn egamma_factors(u: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<[SpecialValue; 4]> {
    let (gamma, tau) = (params.gamma(), params.tau());
    let zeta = (params.n() as f64 + 1.0) * gamma;
    let eg = |x: C| egamma(x, zeta, tau, policy);
    Ok([
        eg(-u + tau)?,
        inverse(eg(u)?, "Gamma_e(u)", policy)?,
        inverse(eg(-u + tau + gamma)?, "Gamma_e(-u+tau+gamma)", policy)?,
        eg(u + gamma)?,
    ])
}

/// χ from the four elliptic gamma functions.
pub fn chi_egamma(u: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let f = egamma_factors(u, params, policy)?;
    let pre = prefactor(params)?;
    let v = pre * f.iter().map(|x| x.value).product::<C>();
    let rel: f64 = f.iter().map(|x| x.est_error / x.value.norm().max(f64::MIN_POSITIVE)).sum();
    Ok(SpecialValue {
        value: v,
        est_error: v.norm() * rel,
        terms_used: f.iter().map(|x| x.terms_used).max().unwrap_or(0),
    })
}

/// P₁..P₄ as quotients of double Pochhammer symbols (x; Q, p)_∞ with Q = q^{2(n+1)}.
pub fn chi_lattice_factors(u: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<[SpecialValue; 4]> {
    let n = params.n() as f64;
    let z = z_of_u(u);
    let zi = z.inv();
    let big_q = params.q_pow(C::new(2.0 * (n + 1.0), 0.0));
    let p = params.p();
    let q2 = params.q_pow(C::new(2.0, 0.0));
    let q2n = params.q_pow(C::new(2.0 * n, 0.0));
    let dp = |x: C| double_pochhammer(x, big_q, p, policy);
    Ok([
        quotient(dp(big_q * zi)?, dp(p * z)?, "P1 denominator", policy)?,
        quotient(dp(zi)?, dp(big_q * p * z)?, "P2 denominator", policy)?,
        quotient(dp(p * q2 * z)?, dp(q2n * zi)?, "P3 denominator", policy)?,
        quotient(dp(p * q2n * z)?, dp(q2 * zi)?, "P4 denominator", policy)?,
    ])
}

/// χ(u,τ,γ) along all routes.
pub fn chi(u: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<ChiValue> {
    let via_products = chi_products(u, params, policy)?;
    let via_egamma = chi_egamma(u, params, policy)?;
    let lat = chi_lattice_factors(u, params, policy)?;
    let eg = egamma_factors(u, params, policy)?;
    let via_lattice = prefactor(params)? * lat.iter().map(|x| x.value).product::<C>();
    let factors = [0, 1, 2, 3].map(|i| ChiFactor {
        lattice: lat[i],
        egamma: eg[i],
    });
    let difference = (via_products.value - via_egamma.value).norm() / via_products.value.norm().max(1.0);
    Ok(ChiValue {
        via_products,
        via_egamma,
        via_lattice,
        factors,
        difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pol() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn setup(n: usize) -> (ModelParams, Weight) {
        let params = ModelParams::new(n, C::new(0.6, 0.0), C::new(-1.7, 0.0)).unwrap();
        let base = [
            C::new(0.3, 0.05),
            C::new(-0.2, 0.11),
            C::new(0.17, -0.03),
            C::new(-0.41, 0.07),
        ];
        (params, Weight(base[..n + 1].to_vec()))
    }

    const U: C = C::new(0.13, 0.02);

    #[test]
    fn connection_formula_outside_the_disc() {
        let base = QBase::new(C::new(0.3, 0.1)).unwrap();
        let (r, s, t) = (C::new(0.37, 0.1), C::new(-0.42, 0.05), C::new(0.81, -0.2));
        for z in [C::new(1.5, 0.4), C::new(-2.1, 1.0), C::new(0.3, -2.5)] {
            let c = connection_residual(r, s, t, &base, z, &pol()).unwrap();
            assert!(c.residual < 1e-10, "z = {z}: {}", c.residual);
        }
    }

    #[test]
    fn connection_coefficients_are_p_periodic() {
        let base = QBase::new(C::new(0.25, -0.1)).unwrap();
        let (r, s, t) = (C::new(0.2, 0.3), C::new(1.4, -0.1), C::new(0.6, 0.0));
        let ln_z = C::new(0.4, 1.1);
        let a = connection_coeffs_log(r, s, t, &base, ln_z, &pol()).unwrap();
        let b = connection_coeffs_log(r, s, t, &base, ln_z + base.ln(), &pol()).unwrap();
        assert!((a.0 - b.0).norm() < 1e-12 * a.0.norm().max(1.0));
        assert!((a.1 - b.1).norm() < 1e-12 * a.1.norm().max(1.0));
    }

    #[test]
    fn equal_exponents_hit_a_gamma_pole() {
        let base = QBase::new(C::new(0.3, 0.0)).unwrap();
        let r = C::new(0.4, 0.1);
        let err = connection_coeffs(r, r, C::new(0.9, 0.0), &base, C::new(1.7, 0.2), &pol()).unwrap_err();
        assert!(matches!(err, Error::PoleHit { .. }), "{err:?}");
    }

    #[test]
    fn all_entry_routes_agree() {
        for n in 1..=3 {
            let (params, lam) = setup(n);
            for m in 0..=n {
                for l in m + 1..=n {
                    let reference = exchange_entries(EntryRoute::GammaTheta, U, &lam, m, l, &params, &pol()).unwrap();
                    for route in EntryRoute::ALL {
                        let e = exchange_entries(route, U, &lam, m, l, &params, &pol()).unwrap();
                        let diff = reference.max_diff(&e);
                        assert!(diff < 1e-10, "n={n} ({m},{l}) {}: {diff}", route.name());
                    }
                }
            }
        }
    }

    #[test]
    fn sigma_spellings_and_reciprocity() {
        let (params, lam) = setup(3);
        for (a, b) in [(0, 1), (1, 3), (0, 3)] {
            let s_ab = sigma_coeff(&lam, a, b, SigmaSpelling::Varpi, &params, &pol()).unwrap();
            let s_ba = sigma_coeff(&lam, b, a, SigmaSpelling::Varpi, &params, &pol()).unwrap();
            assert!((s_ab * s_ba - ONE).norm() < 1e-12);
            let t_ba = sigma_coeff(&lam, b, a, SigmaSpelling::ShiftedWeight, &params, &pol()).unwrap();
            assert!((s_ba - t_ba).norm() < 1e-12 * s_ba.norm());
            assert!(s_ba.norm() > 0.0 && s_ba.norm().is_finite());
        }
        assert!(sigma_coeff(&lam, 1, 1, SigmaSpelling::Varpi, &params, &pol()).is_err());
    }

    #[test]
    fn checked_expectation_values_expand_through_connection() {
        for n in 1..=3 {
            let (params, lam) = setup(n);
            let r = checked_expansion_residual(U, &lam, 0, n, &params, &pol()).unwrap();
            assert!(r < 1e-10, "n={n}: {r}");
        }
    }

    #[test]
    fn bcheck_diagonal_block_is_h_ratio() {
        let (params, lam) = setup(2);
        let z = z_of_u(U);
        let b = bcheck_matrix(z, &lam, 1, 1, &params, &pol()).unwrap();
        assert_eq!(b.dim(), 1);
        let hr = h_ratio(z, &params, &pol()).unwrap().value;
        assert_eq!(b[(0, 0)], hr);
        let b2 = bcheck_matrix(z, &lam, 0, 2, &params, &pol()).unwrap();
        let e = exchange_entries(EntryRoute::GammaTheta, U, &lam, 0, 2, &params, &pol()).unwrap();
        let expect = [[e.beta_lm, e.alpha_ml], [e.alpha_lm, e.beta_ml]];
        for i in 0..2 {
            for j in 0..2 {
                let x = hr * expect[i][j];
                assert!((b2[(i, j)] - x).norm() < 1e-10 * x.norm().max(1.0));
            }
        }
    }

    #[test]
    fn chi_routes_agree() {
        for n in 1..=3 {
            let (params, _) = setup(n);
            let c = chi(U, &params, &pol()).unwrap();
            assert!(c.difference < 1e-10, "n={n}: {}", c.difference);
            assert!((c.via_lattice - c.via_egamma.value).norm() < 1e-10 * c.via_lattice.norm());
            for f in c.factors {
                assert!(f.difference() < 1e-10, "{f:?}");
            }
        }
    }

    #[test]
    fn closed_form_matches_monodromy_assembly() {
        for n in 1..=3 {
            let (params, lam) = setup(n);
            let a = exchange_rmatrix(U, &lam, &params, &pol()).unwrap();
            let b = exchange_rmatrix_monodromy(U, &lam, &params, &pol()).unwrap();
            let diff = a.matrix().sup_diff(b.matrix());
            assert!(diff < 1e-10, "n={n}: {diff}");
            let c = chi_egamma(U, &params, &pol()).unwrap().value;
            for m in 0..=n {
                assert!((a.get((m, m), (m, m)) - c).norm() < 1e-14 * c.norm());
            }
            assert_eq!(a.weight_zero_defect(), 0.0);
        }
    }

    #[test]
    fn unitary_exchange_is_unitary() {
        for n in 1..=3 {
            let (params, lam) = setup(n);
            let r = unitarity_residual(U, &lam, &params, &pol()).unwrap();
            assert!(r < 1e-10, "n={n}: {r}");
        }
    }

    #[test]
    fn theta1_zero_is_a_pole() {
        let (params, lam) = setup(1);
        let err = exchange_entries(EntryRoute::Closed, params.gamma(), &lam, 0, 1, &params, &pol()).unwrap_err();
        assert!(matches!(err, Error::PoleHit { .. }));
    }
}
