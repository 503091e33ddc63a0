//! Solutions of the modified q-Knizhnik–Zamolodchikov equations on the weight
//! spaces V_{m,l} of V⊗V, via the second-order q-difference reduction.
//!
//! Solutions are evaluated on logarithms of their arguments: shifting x ↦ px
//! adds log p to log x, so every complex power stays on one branch along the
//! p-lattice. The plain `eval*` entry points use principal logarithms.

use crate::error::{Error, Result};
use crate::linalg::OperatorVV;
use crate::specfun::{heine_series, QBase, SpecialValue, TruncationPolicy, C};
use crate::trig::{eta, g_scalar, rmat_trig, xi};
use crate::weights::{delta_pair, delta_total, inner, rho, varpi, weight_mu, ModelParams, Weight};

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);

/// Series arguments up to this magnitude are summed directly by [`continue_2phi1`].
pub const SERIES_RADIUS: f64 = 0.5;

/// h(z) = ∏_{l≥0} g(p^{l+1} z)^{−1}, truncated line by line in l.
pub fn h_scalar(z: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let p = params.p();
    let mut w = z * p;
    let mut prod = ONE;
    let mut err_acc: f64 = 0.0;
    let mut terms = 0;
    for l in 0..policy.max_terms {
        let g = g_scalar(w, params.n(), params.q(), policy)?;
        policy.guard("h: g(p^{l+1} z)", g.value)?;
        prod /= g.value;
        err_acc += g.est_error / g.value.norm();
        terms = terms.max(g.terms_used);
        let dev = (g.value - ONE).norm();
        if dev < policy.tail_tol && w.norm() < 1.0 {
            let tail = dev * 2.0 / (1.0 - p.norm());
            return Ok(SpecialValue::new(prod, prod.norm() * (err_acc + tail), terms.max(l + 1)));
        }
        w *= p;
    }
    Err(Error::PolicyExhausted {
        terms: policy.max_terms,
        last: w.norm(),
    })
}

/// Exponent n/(2κ(n+1)) of the scalar G.
fn g_exponent(params: &ModelParams) -> C {
    let n = params.n() as f64;
    C::new(n / (n + 1.0), 0.0) / (2.0 * params.kappa())
}

/// G(x, y) = (x/y)^{n/(2κ(n+1))} h(y/x), from log x and log y.
pub fn big_g_log(ln_x: C, ln_y: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<C> {
    let h = h_scalar((ln_y - ln_x).exp(), params, policy)?;
    Ok((g_exponent(params) * (ln_x - ln_y)).exp() * h.value)
}

/// G(x, y) with principal logarithms.
pub fn big_g(x: C, y: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<C> {
    nonzero(x, "G: x")?;
    nonzero(y, "G: y")?;
    big_g_log(x.ln(), y.ln(), params, policy)
}

/// Scaled residuals of G(x,y) = f(y/x)G(px,y) and G(x,py) = f(py/x)G(x,y).
pub fn g_relation_residuals(x: C, y: C, params: &ModelParams, policy: &TruncationPolicy) -> Result<(f64, f64)> {
    nonzero(x, "G: x")?;
    nonzero(y, "G: y")?;
    let (lx, ly, lp) = (x.ln(), y.ln(), params.ln_p());
    let f = |z: C| crate::trig::f_scalar(z, params.n(), params.q(), policy).map(|v| v.value);
    let g0 = big_g_log(lx, ly, params, policy)?;
    let gpx = big_g_log(lx + lp, ly, params, policy)?;
    let gpy = big_g_log(lx, ly + lp, params, policy)?;
    let rhs1 = f((ly - lx).exp())? * gpx;
    let rhs2 = f((ly + lp - lx).exp())? * g0;
    Ok((scaled(g0, rhs1), scaled(gpy, rhs2)))
}

fn scaled(a: C, b: C) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn nonzero(z: C, what: &'static str) -> Result<()> {
    if z.norm() == 0.0 {
        Err(Error::ZeroArgument(what))
    } else {
        Ok(())
    }
}

/// Coefficients of (A₀z+B₀)f(p²z) + (A₁z+B₁)f(pz) + (A₂z+B₂)f(z) = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondOrderCoeffs {
    pub a0: C,
    pub a1: C,
    pub a2: C,
    pub b0: C,
    pub b1: C,
    pub b2: C,
}

impl SecondOrderCoeffs {
    /// The equation satisfied by ψ₁ on V_{m,l}:
    /// A₀ = p/q, A₁ = −(p^{ϖ+1} + p^{−ϖ}), A₂ = q, B₀ = −q, B₁ = p^ϖ + p^{−ϖ}, B₂ = −1/q.
    pub fn qkz(varpi: C, params: &ModelParams) -> Self {
        let q = params.q();
        let pb = params.p_base();
        let (pv, pmv) = (pb.pow(varpi), pb.pow(-varpi));
        SecondOrderCoeffs {
            a0: pb.value() / q,
            a1: -(pv * pb.value() + pmv),
            a2: q,
            b0: -q,
            b1: pv + pmv,
            b2: -ONE / q,
        }
    }

    /// Residual of the equation for a candidate solution `f` at `z`.
    pub fn residual(&self, p: C, z: C, mut f: impl FnMut(C) -> Result<C>) -> Result<C> {
        Ok((self.a0 * z + self.b0) * f(p * p * z)? + (self.a1 * z + self.b1) * f(p * z)? + (self.a2 * z + self.b2) * f(z)?)
    }
}

/// One solution record: f(z) = z^u ₂φ₁(p^r, p^s, p^t; p, −zA₂/B₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentRecord {
    pub u: C,
    pub r: C,
    pub s: C,
    pub t: C,
}

impl ExponentRecord {
    /// Equality up to integer multiples of 2πi/log p in each exponent and r ↔ s.
    pub fn congruent(&self, other: &ExponentRecord, ln_p: C, tol: f64) -> bool {
        let same = |a: C, b: C| {
            let k = (a - b) * ln_p / crate::specfun::TWO_PI_I;
            (k - C::new(k.re.round(), 0.0)).norm() < tol
        };
        same(self.u, other.u)
            && same(self.t, other.t)
            && ((same(self.r, other.r) && same(self.s, other.s)) || (same(self.r, other.s) && same(self.s, other.r)))
    }
}

/// A second-order equation together with its two local exponent records at z = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceSystemData {
    pub coeffs: SecondOrderCoeffs,
    pub solutions: [ExponentRecord; 2],
}

impl DifferenceSystemData {
    /// Largest residual of the defining relations
    /// p^{2u}B₀ + p^uB₁ + B₂ = 0, p^{2u}A₀/A₂ = p^{r+s}, p^uA₁/A₂ = −(p^r+p^s), p^{2u}B₀/B₂ = p^{t−1}.
    pub fn defining_residual(&self, p: &QBase) -> f64 {
        let c = &self.coeffs;
        let mut worst: f64 = 0.0;
        for rec in &self.solutions {
            let x = p.pow(rec.u);
            let rels = [
                x * x * c.b0 + x * c.b1 + c.b2,
                x * x * c.a0 / c.a2 - p.pow(rec.r + rec.s),
                x * c.a1 / c.a2 + p.pow(rec.r) + p.pow(rec.s),
                x * x * c.b0 / c.b2 - p.pow(rec.t - ONE),
            ];
            for r in rels {
                worst = worst.max(r.norm());
            }
        }
        worst
    }
}

fn quadratic_roots(a: C, b: C, c: C) -> Result<(C, C)> {
    if a.norm() == 0.0 {
        return Err(Error::DegenerateCoefficients("leading coefficient vanishes".into()));
    }
    if c.norm() == 0.0 {
        return Err(Error::DegenerateCoefficients("zero root".into()));
    }
    let disc = (b * b - 4.0 * a * c).sqrt();
    let sgn = if (b.conj() * disc).re >= 0.0 { ONE } else { -ONE };
    let x1 = -(b + sgn * disc) / (2.0 * a);
    let x2 = c / (a * x1);
    Ok((x1, x2))
}

/// Solve for the two exponent records (u, r, s, t); each exponent is the principal
/// logarithm divided by log p.
pub fn reduce_2nd_order(coeffs: SecondOrderCoeffs, p: &QBase) -> Result<DifferenceSystemData> {
    let c = coeffs;
    if c.a2.norm() == 0.0 || c.b2.norm() == 0.0 || c.b0.norm() == 0.0 {
        return Err(Error::DegenerateCoefficients("A2, B2 and B0 must be nonzero".into()));
    }
    let (x1, x2) = quadratic_roots(c.b0, c.b1, c.b2)?;
    if (x1 - x2).norm() <= 1e-12 * x1.norm() {
        return Err(Error::DegenerateCoefficients("double root in p^u".into()));
    }
    let lp = p.ln();
    let mut recs = [ExponentRecord {
        u: ZERO,
        r: ZERO,
        s: ZERO,
        t: ZERO,
    }; 2];
    for (rec, x) in recs.iter_mut().zip([x1, x2]) {
        let (y1, y2) = quadratic_roots(ONE, x * c.a1 / c.a2, x * x * c.a0 / c.a2)?;
        *rec = ExponentRecord {
            u: x.ln() / lp,
            r: y1.ln() / lp,
            s: y2.ln() / lp,
            t: ONE + (x * x * c.b0 / c.b2).ln() / lp,
        };
    }
    Ok(DifferenceSystemData { coeffs, solutions: recs })
}

/// The two exponent records for V_{m,l} written with the representatives
/// (−ϖ+1/2κ, 1/κ+1, 1/κ−2ϖ, −2ϖ+1) and (ϖ+1/2κ, 1/κ, 1/κ+2ϖ+1, 2ϖ+1).
pub fn qkz_exponents(varpi: C, kappa: C) -> [ExponentRecord; 2] {
    let ik = ONE / kappa;
    [
        ExponentRecord {
            u: -varpi + ik / 2.0,
            r: ik + 1.0,
            s: ik - 2.0 * varpi,
            t: -2.0 * varpi + 1.0,
        },
        ExponentRecord {
            u: varpi + ik / 2.0,
            r: ik,
            s: ik + 2.0 * varpi + 1.0,
            t: 2.0 * varpi + 1.0,
        },
    ]
}

/// ₂φ₁(p^r, p^s, p^t; p, z) for any z off the recurrence singularities: the series for
/// |z| ≤ 0.5, otherwise seeded at p^N z, p^{N+1} z inside the disc and carried outward
/// along z, pz, p²z, … by Heine's equation solved for f(w).
pub fn continue_2phi1(r: C, s: C, t: C, base: &QBase, z: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let p = base.value();
    if !(p.norm() < 1.0) {
        return Err(Error::NonConvergent(format!("2phi1 continuation with |p| = {}", p.norm())));
    }
    let (a, b, c) = (base.pow(r), base.pow(s), base.pow(t));
    if z.norm() <= SERIES_RADIUS {
        return heine_series(a, b, c, p, z, policy);
    }
    let mut steps = 0usize;
    let mut w = z;
    while w.norm() > SERIES_RADIUS {
        w *= p;
        steps += 1;
        if steps > policy.max_terms {
            return Err(Error::PolicyExhausted {
                terms: policy.max_terms,
                last: w.norm(),
            });
        }
    }
    let s1 = heine_series(a, b, c, p, w, policy)?;
    let s2 = heine_series(a, b, c, p, w * p, policy)?;
    let (mut f1, mut f2) = (s1.value, s2.value);
    let (mut e1, mut e2) = (s1.est_error, s2.est_error);
    let ab = base.pow(r + s);
    let apb = a + b;
    let ctm1 = base.pow(t - ONE);
    for _ in 0..steps {
        w /= p;
        let den = w - ONE;
        if den.norm() < policy.pole_tol {
            return Err(Error::ChainBlocked(w.into()));
        }
        let k2 = -(ab * w - ctm1) / den;
        let k1 = -(-apb * w + ctm1 + ONE) / den;
        let f0 = k2 * f2 + k1 * f1;
        let e0 = k2.norm() * e2 + k1.norm() * e1 + f64::EPSILON * f0.norm();
        f2 = f1;
        f1 = f0;
        e2 = e1;
        e1 = e0;
    }
    Ok(SpecialValue::new(f1, e1, s1.terms_used.max(s2.terms_used) + steps))
}

/// Which family a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// Expanded in y/x around x/y = ∞.
    Fusion,
    /// Expanded in x/y around x/y = 0 and rotated by P·R(x/y).
    Intertwined,
}

/// A solution of the modified qKZ equations on V_{m,l} (m ≤ l), normalized by its
/// expectation value. Components are along v_m⊗v_l and v_l⊗v_m.
///
/// For [`SolutionKind::Intertwined`] the first argument of the evaluation methods is
/// y and the second is x.
#[derive(Debug, Clone, PartialEq)]
pub struct QkzSolution {
    pub kind: SolutionKind,
    pub m: usize,
    pub l: usize,
    /// 1 for the solution starting at v_m⊗v_l, 2 for v_l⊗v_m.
    pub branch: u8,
    pub varpi: C,
    pub delta: C,
    pub delta1: C,
    pub delta2: C,
    /// ε = (q − 1/q)/(1 − p^{−(2ϖ+1)}).
    pub epsilon: C,
    /// ε̌₁ = q(q − 1/q)/(p^{−2ϖ} − 1) or ε̌₂ = q for intertwined solutions, 1 otherwise.
    pub prefactor: C,
    lambda: Weight,
    params: ModelParams,
    policy: TruncationPolicy,
}

fn build(
    kind: SolutionKind,
    m: usize,
    l: usize,
    branch: u8,
    lambda: &Weight,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<QkzSolution> {
    let n = params.n();
    if m > n || l > n {
        return Err(Error::IndexOutOfRange { index: m.max(l), n });
    }
    if m > l {
        return Err(Error::DomainError(format!("weight space V_({m},{l}) needs m <= l")));
    }
    if branch != 1 && branch != 2 {
        return Err(Error::DomainError(format!("branch must be 1 or 2, got {branch}")));
    }
    if lambda.len() != params.dim() {
        return Err(Error::LengthMismatch(lambda.len(), params.dim()));
    }
    let q = params.q();
    let pb = params.p_base();
    let delta = delta_total(lambda, m, l, params)?;
    let j = if branch == 1 { l } else { m };
    let (delta1, delta2) = delta_pair(lambda, m, l, j, params)?;
    let (vp, epsilon, prefactor) = if m == l {
        (ZERO, ONE, ONE)
    } else {
        let vp = varpi(lambda, m, l, params)?;
        let den = ONE - pb.pow(-(2.0 * vp + 1.0));
        policy.guard("epsilon: 1 - p^{-(2 varpi + 1)}", den)?;
        let eps = (q - ONE / q) / den;
        let pre = match (kind, branch) {
            (SolutionKind::Fusion, _) => ONE,
            (SolutionKind::Intertwined, 1) => {
                let d = pb.pow(-2.0 * vp) - ONE;
                policy.guard("check-epsilon_1: p^{-2 varpi} - 1", d)?;
                q * (q - ONE / q) / d
            }
            (SolutionKind::Intertwined, _) => q,
        };
        (vp, eps, pre)
    };
    Ok(QkzSolution {
        kind,
        m,
        l,
        branch,
        varpi: vp,
        delta,
        delta1,
        delta2,
        epsilon,
        prefactor,
        lambda: lambda.clone(),
        params: *params,
        policy: *policy,
    })
}

/// The fusion solution of V_{m,l} starting at v_m⊗v_l (branch 1) or v_l⊗v_m (branch 2).
pub fn fusion_solution(
    m: usize,
    l: usize,
    branch: u8,
    lambda: &Weight,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<QkzSolution> {
    build(SolutionKind::Fusion, m, l, branch, lambda, params, policy)
}

/// The intertwined fusion solution of V_{m,l}.
pub fn intertwined_solution(
    m: usize,
    l: usize,
    branch: u8,
    lambda: &Weight,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<QkzSolution> {
    build(SolutionKind::Intertwined, m, l, branch, lambda, params, policy)
}

/// Leading coefficients of a fusion solution's expansion in y/x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionExpansion {
    /// Degree-zero coefficients along v_m⊗v_l and v_l⊗v_m.
    pub constant: [C; 2],
    /// Coefficient of the x/y power that must cancel in ψ₂.
    pub cancelled: C,
}

impl QkzSolution {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn lambda(&self) -> &Weight {
        &self.lambda
    }

    pub fn is_diagonal(&self) -> bool {
        self.m == self.l
    }

    /// Heine parameters (r, s, t) of the ₂φ₁ inside ψ₁ (fusion) or ψ̇₁ (intertwined).
    pub fn heine_parameters(&self) -> (C, C, C) {
        let ik = ONE / self.params.kappa();
        let v = self.varpi;
        match (self.kind, self.branch) {
            (SolutionKind::Fusion, 1) => (ik, -2.0 * v + ik, -2.0 * v),
            (SolutionKind::Fusion, _) => (ONE + ik, ONE + 2.0 * v + ik, 2.0 * (v + ONE)),
            (SolutionKind::Intertwined, 1) => (ONE + ik, -2.0 * v + ik, -2.0 * v + ONE),
            (SolutionKind::Intertwined, _) => (ik, 2.0 * v + ONE + ik, 2.0 * v + ONE),
        }
    }

    /// log of the ₂φ₁ argument for given log z: p^{1−1/κ}/z (fusion) or p^{−1/κ}z (intertwined).
    fn series_arg_ln(&self, ln_z: C) -> C {
        let ik = ONE / self.params.kappa();
        let lp = self.params.ln_p();
        match self.kind {
            SolutionKind::Fusion => (ONE - ik) * lp - ln_z,
            SolutionKind::Intertwined => -ik * lp + ln_z,
        }
    }

    /// Power of z in front of the ₂φ₁, and the constant in front of it.
    fn leading_power(&self) -> (C, C) {
        let ik = ONE / self.params.kappa();
        let v = self.varpi;
        match (self.kind, self.branch) {
            (SolutionKind::Fusion, 1) => (v - ik / 2.0, ONE),
            (SolutionKind::Fusion, _) => (-v - ik / 2.0 - ONE, self.epsilon),
            (SolutionKind::Intertwined, 1) => (-v + ik / 2.0, ONE),
            (SolutionKind::Intertwined, _) => (v + ik / 2.0, ONE),
        }
    }

    /// ψ₁ (fusion) or ψ̇₁ (intertwined) at z = exp(ln_z).
    pub fn psi1_log(&self, ln_z: C) -> Result<C> {
        if self.is_diagonal() {
            return Ok(ONE);
        }
        let (r, s, t) = self.heine_parameters();
        let arg = self.series_arg_ln(ln_z).exp();
        let f = continue_2phi1(r, s, t, &self.params.p_base(), arg, &self.policy)?;
        let (pow, c) = self.leading_power();
        Ok(c * (pow * ln_z).exp() * f.value)
    }

    /// ψ₂ from ψ₁ by [p^{−ϖ}(q − z/q)ψ₁(pz) − (1 − z)ψ₁(z)]/(q − 1/q).
    pub fn psi2_log(&self, ln_z: C) -> Result<C> {
        if self.is_diagonal() {
            return Ok(ZERO);
        }
        let q = self.params.q();
        let z = ln_z.exp();
        let a = self.psi1_log(ln_z + self.params.ln_p())?;
        let b = self.psi1_log(ln_z)?;
        Ok((self.params.p_pow(-self.varpi) * (q - z / q) * a - (ONE - z) * b) / (q - ONE / q))
    }

    /// Components of ψ(z) along (v_m⊗v_l, v_l⊗v_m), without the (xy)^{−Δ/2} factor.
    /// Intertwined: ε̌·(zη(z)ψ̇₁ + ξ(z)ψ̇₂, ξ(z)ψ̇₁ + η(z)ψ̇₂).
    pub fn components_log(&self, ln_z: C) -> Result<[C; 2]> {
        if self.is_diagonal() {
            return Ok([ONE, ZERO]);
        }
        let p1 = self.psi1_log(ln_z)?;
        let p2 = self.psi2_log(ln_z)?;
        match self.kind {
            SolutionKind::Fusion => Ok([p1, p2]),
            SolutionKind::Intertwined => {
                let z = ln_z.exp();
                let q = self.params.q();
                let (x, e) = (xi(z, q)?, eta(z, q)?);
                let c = self.prefactor;
                Ok([c * (z * e * p1 + x * p2), c * (x * p1 + e * p2)])
            }
        }
    }

    fn ratio_ln(&self, ln_first: C, ln_second: C) -> C {
        match self.kind {
            SolutionKind::Fusion => ln_first - ln_second,
            SolutionKind::Intertwined => ln_second - ln_first,
        }
    }

    /// Modified solution (xy)^{−Δ/2}ψ, as a vector on V⊗V, from logs of its two arguments.
    pub fn eval_modified_log(&self, ln_first: C, ln_second: C) -> Result<Vec<C>> {
        let comps = self.components_log(self.ratio_ln(ln_first, ln_second))?;
        let pre = (-self.delta / 2.0 * (ln_first + ln_second)).exp();
        let d = self.params.dim();
        let mut v = vec![ZERO; d * d];
        v[self.m * d + self.l] = pre * comps[0];
        if !self.is_diagonal() {
            v[self.l * d + self.m] = pre * comps[1];
        }
        Ok(v)
    }

    /// Full solution G(first, second)·(modified solution).
    pub fn eval_full_log(&self, ln_first: C, ln_second: C) -> Result<Vec<C>> {
        let g = big_g_log(ln_first, ln_second, &self.params, &self.policy)?;
        Ok(self
            .eval_modified_log(ln_first, ln_second)?
            .into_iter()
            .map(|c| c * g)
            .collect())
    }

    /// Modified solution at (first, second) with principal logarithms.
    pub fn eval_modified(&self, first: C, second: C) -> Result<Vec<C>> {
        nonzero(first, "qkz solution argument")?;
        nonzero(second, "qkz solution argument")?;
        self.eval_modified_log(first.ln(), second.ln())
    }

    /// Full solution at (first, second) with principal logarithms.
    pub fn eval_full(&self, first: C, second: C) -> Result<Vec<C>> {
        nonzero(first, "qkz solution argument")?;
        nonzero(second, "qkz solution argument")?;
        self.eval_full_log(first.ln(), second.ln())
    }

    /// Residual of the second-order equation for ψ₁ (or ψ̇₁) at z.
    pub fn second_order_residual(&self, z: C) -> Result<f64> {
        if self.is_diagonal() {
            return Ok(0.0);
        }
        nonzero(z, "second_order_residual")?;
        let coeffs = SecondOrderCoeffs::qkz(self.varpi, &self.params);
        let lz = z.ln();
        let lp = self.params.ln_p();
        let f = [self.psi1_log(lz)?, self.psi1_log(lz + lp)?, self.psi1_log(lz + 2.0 * lp)?];
        let terms = [
            (coeffs.a0 * z + coeffs.b0) * f[2],
            (coeffs.a1 * z + coeffs.b1) * f[1],
            (coeffs.a2 * z + coeffs.b2) * f[0],
        ];
        let scale = terms.iter().map(|t| t.norm()).fold(1.0, f64::max);
        Ok((terms[0] + terms[1] + terms[2]).norm() / scale)
    }

    /// Residual of ψ(pz) = [[ξp^ϖ, ηp^ϖ], [zηp^{−ϖ}, ξp^{−ϖ}]]ψ(z) for the pair (ψ₁, ψ₂)
    /// (or (ψ̇₁, ψ̇₂) for intertwined solutions).
    pub fn first_order_residual(&self, z: C) -> Result<f64> {
        if self.is_diagonal() {
            return Ok(0.0);
        }
        nonzero(z, "first_order_residual")?;
        let lz = z.ln();
        let lp = self.params.ln_p();
        let q = self.params.q();
        let (a1, a2) = (self.psi1_log(lz)?, self.psi2_log(lz)?);
        let (b1, b2) = (self.psi1_log(lz + lp)?, self.psi2_log(lz + lp)?);
        let (x, e) = (xi(z, q)?, eta(z, q)?);
        let pv = self.params.p_pow(self.varpi);
        let pmv = self.params.p_pow(-self.varpi);
        let r1 = x * pv * a1 + e * pv * a2;
        let r2 = z * e * pmv * a1 + x * pmv * a2;
        let scale = [a1, a2, b1, b2].iter().map(|t| t.norm()).fold(1.0, f64::max);
        Ok((b1 - r1).norm().max((b2 - r2).norm()) / scale)
    }

    /// Degree-zero and cancelling coefficients of a fusion solution's expansion in y/x.
    pub fn fusion_expansion(&self) -> Result<FusionExpansion> {
        if self.kind != SolutionKind::Fusion {
            return Err(Error::DomainError("expansion in y/x is defined for fusion solutions".into()));
        }
        if self.is_diagonal() {
            return Ok(FusionExpansion {
                constant: [ONE, ZERO],
                cancelled: ZERO,
            });
        }
        let pb = self.params.p_base();
        let p = pb.value();
        let q = self.params.q();
        let (r, s, t) = self.heine_parameters();
        let c1 = (ONE - pb.pow(r)) * (ONE - pb.pow(s)) / ((ONE - pb.pow(t)) * (ONE - p));
        let big_p = pb.pow(ONE - ONE / self.params.kappa());
        // ψ₁ = E z^b Σ a_k z^{−k}, shifted down by one degree on branch 2.
        let (a0, a1) = (ONE, c1 * big_p);
        let (b, e) = self.leading_power();
        let shift = if self.branch == 1 { 0 } else { 1 };
        let b_norm = b + shift as f64;
        let lead = self.params.p_pow(-self.varpi) * pb.pow(b_norm);
        // z^{−b}ψ₁ = Σ_k s_k z^{−k}; z^{−b}ψ₁(pz) = p^{b}Σ_k s_k p^{−k} z^{−k}.
        let s_coef = |k: i64| -> C {
            let idx = k - shift;
            match idx {
                0 => e * a0,
                1 => e * a1,
                _ => ZERO,
            }
        };
        let s_coef_p = |k: i64| -> C { s_coef(k) * p.powi(-(k as i32)) };
        // z^{−b}ψ₂ = [lead·(q − z/q)S(pz) − (1 − z)S(z)]/(q − 1/q); coefficient of z^{d}.
        let coef = |d: i64| -> C {
            let from_q = lead * (q * s_coef_p(-d) - s_coef_p(1 - d) / q);
            let from_one = s_coef(-d) - s_coef(1 - d);
            (from_q - from_one) / (q - ONE / q)
        };
        Ok(FusionExpansion {
            constant: [s_coef(0), coef(0)],
            cancelled: coef(1),
        })
    }
}

/// Diagonal operator v_j ↦ q^{⟨2λ − (μ_m+μ_l) + 2ρ, μ_j⟩} v_j on V.
pub fn qkz_diagonal(lambda: &Weight, m: usize, l: usize, params: &ModelParams) -> Result<Vec<C>> {
    let n = params.n();
    let two = C::new(2.0, 0.0);
    let nu = &(&lambda.scale(two) - &(&weight_mu(m, n)? + &weight_mu(l, n)?)) + &rho(n).scale(two);
    (0..=n)
        .map(|j| Ok(params.q_pow(inner(&nu, &weight_mu(j, n)?)?)))
        .collect()
}

/// Scaled residuals of the two modified qKZ equations
/// Ψ(pa, b) = D₍₁₎R(a/b)Ψ(a, b) and Ψ(a, pb) = P R(pb/a) P D₍₂₎Ψ(a, b)
/// at the argument pair (a, b) (for intertwined solutions a = y, b = x).
pub fn qkz_residual(sol: &QkzSolution, a: C, b: C) -> Result<(f64, f64)> {
    nonzero(a, "qkz_residual")?;
    nonzero(b, "qkz_residual")?;
    let params = sol.params();
    let n = params.n();
    let (la, lb, lp) = (a.ln(), b.ln(), params.ln_p());
    let d = qkz_diagonal(sol.lambda(), sol.m, sol.l, params)?;
    let psi = sol.eval_modified_log(la, lb)?;
    let psi_pa = sol.eval_modified_log(la + lp, lb)?;
    let psi_pb = sol.eval_modified_log(la, lb + lp)?;
    let op1 = OperatorVV::diag_first(&d).compose(&rmat_trig((la - lb).exp(), n, params.q())?);
    let flip = OperatorVV::flip(n);
    let op2 = flip
        .compose(&rmat_trig((lb + lp - la).exp(), n, params.q())?)
        .compose(&flip)
        .compose(&OperatorVV::diag_second(&d));
    let rhs1 = op1.matrix().apply(&psi);
    let rhs2 = op2.matrix().apply(&psi);
    Ok((vec_residual(&psi_pa, &rhs1), vec_residual(&psi_pb, &rhs2)))
}

/// Scaled residual of Ψ(pa, pb) = p^{−Δ}Ψ(a, b).
pub fn combined_shift_residual(sol: &QkzSolution, a: C, b: C) -> Result<f64> {
    nonzero(a, "combined_shift_residual")?;
    nonzero(b, "combined_shift_residual")?;
    let lp = sol.params().ln_p();
    let (la, lb) = (a.ln(), b.ln());
    let lhs = sol.eval_modified_log(la + lp, lb + lp)?;
    let f = sol.params().p_pow(-sol.delta);
    let rhs: Vec<C> = sol.eval_modified_log(la, lb)?.into_iter().map(|c| c * f).collect();
    Ok(vec_residual(&lhs, &rhs))
}

fn vec_residual(a: &[C], b: &[C]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.norm()).fold(1.0, f64::max);
    diff / scale
}

/// Difference between an intertwined solution and P·R(x/y) applied to the modified
/// solution around x/y = 0 built from ψ̇ (times ε̌), i.e. the matrix-application oracle.
pub fn intertwined_rotation_residual(sol: &QkzSolution, x: C, y: C) -> Result<f64> {
    if sol.kind != SolutionKind::Intertwined {
        return Err(Error::DomainError("rotation residual needs an intertwined solution".into()));
    }
    nonzero(x, "rotation residual")?;
    nonzero(y, "rotation residual")?;
    let params = sol.params();
    let n = params.n();
    let d = params.dim();
    let (lx, ly) = (x.ln(), y.ln());
    let lw = lx - ly;
    let pre = (-sol.delta / 2.0 * (lx + ly)).exp() * sol.prefactor;
    let mut dotted = vec![ZERO; d * d];
    if sol.is_diagonal() {
        dotted[sol.m * d + sol.m] = pre;
    } else {
        dotted[sol.m * d + sol.l] = pre * sol.psi1_log(lw)?;
        dotted[sol.l * d + sol.m] = pre * sol.psi2_log(lw)?;
    }
    let pr = OperatorVV::flip(n).compose(&rmat_trig(lw.exp(), n, params.q())?);
    let rotated = pr.matrix().apply(&dotted);
    let direct = sol.eval_modified_log(ly, lx)?;
    Ok(vec_residual(&rotated, &direct))
}
