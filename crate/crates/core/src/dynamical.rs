//! Felder's elliptic dynamical R-matrix, the dynamical Yang–Baxter residual, gauge
//! transformations and the fusion matrix J(λ).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exchange::{chi_egamma, elliptic_alpha, elliptic_beta, exchange_reduced, sigma_coeff, z_of_u, EntryRoute, SigmaSpelling};
use crate::linalg::{embed3_with, scaled_residual, OperatorVV};
use crate::qkz::fusion_solution;
use crate::specfun::{QBase, TruncationPolicy, C};
use crate::trig::rmat_trig;
use crate::weights::{inner, rho, weight_mu, ModelParams, Weight};

const ONE: C = C::new(1.0, 0.0);
const ZERO: C = C::new(0.0, 0.0);

/// Felder's R^{ell}_{γ,τ}(u,λ) = Σ E_mm⊗E_mm + Σ_{m≠l} α(u,λ_{m,l})E_mm⊗E_ll + β(u,λ_{m,l})E_lm⊗E_ml
/// with λ_{m,l} = λ_m − λ_l.
pub fn felder_rmatrix(
    u: C,
    lambda: &Weight,
    gamma: C,
    tau: C,
    n: usize,
    policy: &TruncationPolicy,
) -> Result<OperatorVV> {
    if lambda.len() != n + 1 {
        return Err(Error::LengthMismatch(lambda.len(), n + 1));
    }
    let mut op = OperatorVV::zeros(n);
    for m in 0..=n {
        op.set((m, m), (m, m), ONE);
        for l in 0..=n {
            if l != m {
                let big_l = lambda.diff(m, l);
                op.set((m, l), (m, l), elliptic_alpha(u, big_l, gamma, tau, policy)?);
                op.set((l, m), (m, l), elliptic_beta(u, big_l, gamma, tau, policy)?);
            }
        }
    }
    Ok(op)
}

/// The undressed solution a descriptor starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseKind {
    Identity,
    /// The trigonometric R(z) at z = e^{−2πiu}; independent of λ.
    Trig,
    /// The exchange matrix R_k(u,λ), step 1.
    Exchange,
    /// Felder's solution at the (γ, τ) of the model, step γ.
    Felder,
}

pub type ScalarGauge = Arc<dyn Fn(C) -> Result<C> + Send + Sync>;
pub type TwoForm = Arc<dyn Fn(&Weight, usize, usize) -> Result<C> + Send + Sync>;

/// One gauge transformation.
#[derive(Clone)]
pub enum Gauge {
    /// R(u,λ) ↦ c(u)R(u,λ).
    Scalar(ScalarGauge),
    /// R(u,λ) ↦ R(au, bλ+μ).
    Rescale { a: C, b: C, mu: Weight },
    /// α_{m,l}(u,λ) ↦ φ_{m,l}(λ)α_{m,l}(u,λ).
    TwoForm(TwoForm),
}

impl fmt::Debug for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gauge::Scalar(_) => write!(f, "Scalar(..)"),
            Gauge::Rescale { a, b, mu } => write!(f, "Rescale {{ a: {a}, b: {b}, mu: {mu:?} }}"),
            Gauge::TwoForm(_) => write!(f, "TwoForm(..)"),
        }
    }
}

/// A dynamical R-matrix: a base solution, the step of the dynamical Yang–Baxter
/// equation it solves, and the gauge transformations applied to it.
#[derive(Debug, Clone)]
pub struct RMatrixDescriptor {
    pub kind: BaseKind,
    pub params: ModelParams,
    pub step: C,
    pub gauge_stack: Vec<Gauge>,
    pub policy: TruncationPolicy,
}

impl RMatrixDescriptor {
    pub fn new(kind: BaseKind, params: ModelParams, policy: TruncationPolicy) -> Self {
        let step = match kind {
            BaseKind::Identity | BaseKind::Trig => ZERO,
            BaseKind::Exchange => ONE,
            BaseKind::Felder => params.gamma(),
        };
        RMatrixDescriptor {
            kind,
            params,
            step,
            gauge_stack: Vec::new(),
            policy,
        }
    }

    pub fn is_gauged(&self) -> bool {
        !self.gauge_stack.is_empty()
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    fn base(&self, u: C, lambda: &Weight) -> Result<OperatorVV> {
        let n = self.n();
        match self.kind {
            BaseKind::Identity => Ok(OperatorVV::identity(n)),
            BaseKind::Trig => rmat_trig(z_of_u(u), n, self.params.q()),
            BaseKind::Exchange => {
                let c = chi_egamma(u, &self.params, &self.policy)?.value;
                Ok(exchange_reduced(EntryRoute::Closed, u, lambda, &self.params, &self.policy)?.scale(c))
            }
            BaseKind::Felder => felder_rmatrix(u, lambda, self.params.gamma(), self.params.tau(), n, &self.policy),
        }
    }

    fn eval_level(&self, level: usize, u: C, lambda: &Weight) -> Result<OperatorVV> {
        if level == 0 {
            return self.base(u, lambda);
        }
        match &self.gauge_stack[level - 1] {
            Gauge::Scalar(c) => Ok(self.eval_level(level - 1, u, lambda)?.scale(c(u)?)),
            Gauge::Rescale { a, b, mu } => {
                if mu.len() != lambda.len() {
                    return Err(Error::LengthMismatch(mu.len(), lambda.len()));
                }
                let shifted = &lambda.scale(*b) + mu;
                self.eval_level(level - 1, a * u, &shifted)
            }
            Gauge::TwoForm(phi) => {
                let mut op = self.eval_level(level - 1, u, lambda)?;
                let n = self.n();
                for m in 0..=n {
                    for l in 0..=n {
                        if l != m {
                            let v = op.get((m, l), (m, l));
                            op.set((m, l), (m, l), phi(lambda, m, l)? * v);
                        }
                    }
                }
                Ok(op)
            }
        }
    }

    /// R(u,λ) with every gauge applied.
    pub fn eval(&self, u: C, lambda: &Weight) -> Result<OperatorVV> {
        if lambda.len() != self.params.dim() {
            return Err(Error::LengthMismatch(lambda.len(), self.params.dim()));
        }
        self.eval_level(self.gauge_stack.len(), u, lambda)
    }
}

/// c(u)R(u,λ); the step is unchanged.
pub fn gauge_scalar(r: &RMatrixDescriptor, c: ScalarGauge) -> RMatrixDescriptor {
    let mut out = r.clone();
    out.gauge_stack.push(Gauge::Scalar(c));
    out
}

/// R(au, bλ+μ); the step is divided by b.
pub fn gauge_rescale(r: &RMatrixDescriptor, a: C, b: C, mu: Weight) -> Result<RMatrixDescriptor> {
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(Error::DomainError("rescale needs a, b != 0".into()));
    }
    let mut out = r.clone();
    out.step = r.step / b;
    out.gauge_stack.push(Gauge::Rescale { a, b, mu });
    Ok(out)
}

/// φ_{m,l}(λ)α_{m,l}(u,λ) on the E_mm⊗E_ll entries; the step is unchanged.
pub fn gauge_twoform(r: &RMatrixDescriptor, phi: TwoForm) -> RMatrixDescriptor {
    let mut out = r.clone();
    out.gauge_stack.push(Gauge::TwoForm(phi));
    out
}

/// Scaled residual of
/// R¹²(u₁−u₂, λ−sh⁽³⁾)R¹³(u₁−u₃, λ)R²³(u₂−u₃, λ−sh⁽¹⁾) = R²³(u₂−u₃, λ)R¹³(u₁−u₃, λ−sh⁽²⁾)R¹²(u₁−u₂, λ)
/// on V⊗V⊗V, where sh⁽ⁱ⁾ shifts λ by step·μ_j on the component where slot i carries v_j.
pub fn dqybe_residual(r: &RMatrixDescriptor, u1: C, u2: C, u3: C, lambda: &Weight) -> Result<f64> {
    let n = r.n();
    let plain = |u: C| r.eval(u, lambda);
    let shifted = |u: C| -> Result<Vec<OperatorVV>> {
        (0..=n)
            .map(|j| {
                let mu = weight_mu(j, n)?;
                r.eval(u, &(lambda - &mu.scale(r.step)))
            })
            .collect()
    };
    let r12_s = shifted(u1 - u2)?;
    let r13 = plain(u1 - u3)?;
    let r23_s = shifted(u2 - u3)?;
    let lhs = &(&embed3_with(n, 0, 1, |k| &r12_s[k]) * &embed3_with(n, 0, 2, |_| &r13))
        * &embed3_with(n, 1, 2, |k| &r23_s[k]);
    let r23 = plain(u2 - u3)?;
    let r13_s = shifted(u1 - u3)?;
    let r12 = plain(u1 - u2)?;
    let rhs = &(&embed3_with(n, 1, 2, |_| &r23) * &embed3_with(n, 0, 2, |k| &r13_s[k]))
        * &embed3_with(n, 0, 1, |_| &r12);
    Ok(scaled_residual(&lhs, &rhs))
}

/// The gauge chain taking R_k(u,λ) to Felder's solution: χ(u)^{−1}, then
/// (a, b, μ) = (1, 1/γ, −ρ), then φ_{m,l}(λ) = σ_{l,m}(λ/γ − ρ).
pub fn equivalence_chain(params: &ModelParams, policy: &TruncationPolicy) -> Result<[RMatrixDescriptor; 4]> {
    let exchange = RMatrixDescriptor::new(BaseKind::Exchange, *params, *policy);
    let (pa, po) = (*params, *policy);
    let unscaled = gauge_scalar(
        &exchange,
        Arc::new(move |u| {
            let c = chi_egamma(u, &pa, &po)?.value;
            po.guard("chi(u)", c)?;
            Ok(ONE / c)
        }),
    );
    let gamma = params.gamma();
    let n = params.n();
    let rescaled = gauge_rescale(&unscaled, ONE, ONE / gamma, -&rho(n))?;
    let closed = gauge_twoform(
        &rescaled,
        Arc::new(move |lambda: &Weight, m, l| {
            let shifted = &lambda.scale(ONE / gamma) - &rho(n);
            sigma_coeff(&shifted, l, m, SigmaSpelling::ShiftedWeight, &pa, &po)
        }),
    );
    Ok([exchange, unscaled, rescaled, closed])
}

/// Outcome of the gauge chain at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// Entrywise sup distance between the gauged exchange matrix and Felder's solution.
    pub residual: f64,
    /// The same distance restricted to β entries before the two-form step.
    pub beta_residual_before_twoform: f64,
    /// Sup |coefficient − 1| on E_mm⊗E_mm after removing χ.
    pub diagonal_defect_after_scalar: f64,
    pub step: C,
    pub expected_step: C,
}

pub fn equivalence_pipeline(
    u: C,
    lambda: &Weight,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<EquivalenceReport> {
    let [_, unscaled, rescaled, closed] = equivalence_chain(params, policy)?;
    let n = params.n();
    let felder = felder_rmatrix(u, lambda, params.gamma(), params.tau(), n, policy)?;
    let gauged = closed.eval(u, lambda)?;
    let before = rescaled.eval(u, lambda)?;
    let mut beta_residual: f64 = 0.0;
    for m in 0..=n {
        for l in 0..=n {
            if l != m {
                beta_residual = beta_residual.max((before.get((l, m), (m, l)) - felder.get((l, m), (m, l))).norm());
            }
        }
    }
    let mut diag: f64 = 0.0;
    let first = unscaled.eval(u, lambda)?;
    for m in 0..=n {
        diag = diag.max((first.get((m, m), (m, m)) - ONE).norm());
    }
    Ok(EquivalenceReport {
        residual: gauged.matrix().sup_diff(felder.matrix()),
        beta_residual_before_twoform: beta_residual,
        diagonal_defect_after_scalar: diag,
        step: closed.step,
        expected_step: params.gamma(),
    })
}

/// J(λ) = Σ E_ii⊗E_jj + Σ_{i<j} (q − 1/q)/(1 − q^{2(λ_i−λ_j+j−i)}) E_ji⊗E_ij.
pub fn fusion_matrix(lambda: &Weight, n: usize, q: C, policy: &TruncationPolicy) -> Result<OperatorVV> {
    if lambda.len() != n + 1 {
        return Err(Error::LengthMismatch(lambda.len(), n + 1));
    }
    let base = QBase::new(q)?;
    let mut op = OperatorVV::identity(n);
    for i in 0..=n {
        for j in i + 1..=n {
            let x = 2.0 * (lambda.diff(i, j) + (j - i) as f64);
            let den = ONE - base.pow(x);
            policy.guard("fusion matrix: 1 - q^{2(lambda_i - lambda_j + j - i)}", den)?;
            op.set((j, i), (i, j), (q - ONE / q) / den);
        }
    }
    Ok(op)
}

/// Structural defects of a fusion matrix in the ordered basis v_i⊗v_j ↦ i(n+1)+j.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularDefect {
    /// sup |J_rr − 1|.
    pub diagonal: f64,
    /// sup |J_rc| over r < c.
    pub upper: f64,
}

pub fn triangular_defect(j: &OperatorVV) -> TriangularDefect {
    let m = j.matrix();
    let d = m.dim();
    let mut out = TriangularDefect {
        diagonal: 0.0,
        upper: 0.0,
    };
    for r in 0..d {
        out.diagonal = out.diagonal.max((m[(r, r)] - ONE).norm());
        for c in r + 1..d {
            out.upper = out.upper.max(m[(r, c)].norm());
        }
    }
    out
}

/// sup over i < j of |2(λ_i − λ_j + j − i) − 2⟨λ+ρ, μ_i − μ_j⟩|.
pub fn fusion_exponent_residual(lambda: &Weight, n: usize) -> Result<f64> {
    if lambda.len() != n + 1 {
        return Err(Error::LengthMismatch(lambda.len(), n + 1));
    }
    let lr = lambda + &rho(n);
    let mut worst: f64 = 0.0;
    for i in 0..=n {
        for j in i + 1..=n {
            let direct = 2.0 * (lambda.diff(i, j) + (j - i) as f64);
            let pairing = 2.0 * inner(&lr, &(&weight_mu(i, n)? - &weight_mu(j, n)?))?;
            worst = worst.max((direct - pairing).norm());
        }
    }
    Ok(worst)
}

/// Degree-zero coefficients of the two fusion solutions on V_{m,l} next to the
/// columns of J(λ) on v_m⊗v_l and v_l⊗v_m, in components (v_m⊗v_l, v_l⊗v_m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTermRecord {
    pub m: usize,
    pub l: usize,
    pub series: [[C; 2]; 2],
    pub fusion: [[C; 2]; 2],
    /// series/fusion for the off-diagonal component of the v_m⊗v_l column.
    pub ratio: C,
    pub difference: f64,
}

pub fn fusion_constant_terms(
    lambda: &Weight,
    m: usize,
    l: usize,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<ConstantTermRecord> {
    if m >= l {
        return Err(Error::DomainError(format!("constant-term check needs m < l, got ({m},{l})")));
    }
    let j = fusion_matrix(lambda, params.n(), params.q(), policy)?;
    let mut series = [[ZERO; 2]; 2];
    let mut fusion = [[ZERO; 2]; 2];
    for (b, col) in [(1u8, (m, l)), (2u8, (l, m))] {
        let sol = fusion_solution(m, l, b, lambda, params, policy)?;
        let k = (b - 1) as usize;
        series[k] = sol.fusion_expansion()?.constant;
        fusion[k] = [j.get((m, l), col), j.get((l, m), col)];
    }
    let mut difference: f64 = 0.0;
    for k in 0..2 {
        for c in 0..2 {
            difference = difference.max((series[k][c] - fusion[k][c]).norm());
        }
    }
    Ok(ConstantTermRecord {
        m,
        l,
        series,
        fusion,
        ratio: series[0][1] / fusion[0][1],
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

    const US: [C; 3] = [C::new(0.13, 0.02), C::new(-0.21, 0.04), C::new(0.05, -0.03)];

    #[test]
    fn felder_has_unit_diagonal_and_weight_zero() {
        let (params, lam) = setup(2);
        let r = felder_rmatrix(US[0], &lam, params.gamma(), params.tau(), 2, &pol()).unwrap();
        for m in 0..3 {
            assert_eq!(r.get((m, m), (m, m)), ONE);
        }
        assert_eq!(r.weight_zero_defect(), 0.0);
        let pole = felder_rmatrix(params.gamma(), &lam, params.gamma(), params.tau(), 2, &pol());
        assert!(matches!(pole, Err(Error::PoleHit { .. })));
    }

    #[test]
    fn identity_descriptor_solves_trivially() {
        let (params, lam) = setup(1);
        let r = RMatrixDescriptor::new(BaseKind::Identity, params, pol());
        assert_eq!(dqybe_residual(&r, US[0], US[1], US[2], &lam).unwrap(), 0.0);
    }

    #[test]
    fn felder_and_exchange_solve_their_dqybe() {
        for n in 1..=3 {
            let (params, lam) = setup(n);
            for kind in [BaseKind::Felder, BaseKind::Exchange, BaseKind::Trig] {
                let r = RMatrixDescriptor::new(kind, params, pol());
                let res = dqybe_residual(&r, US[0], US[1], US[2], &lam).unwrap();
                assert!(res < 1e-10, "n={n} {kind:?}: {res}");
            }
        }
    }

    #[test]
    fn wrong_step_breaks_felder() {
        let (params, lam) = setup(1);
        let mut r = RMatrixDescriptor::new(BaseKind::Felder, params, pol());
        r.step = ONE;
        assert!(dqybe_residual(&r, US[0], US[1], US[2], &lam).unwrap() > 1e-4);
    }

    #[test]
    fn gauges_preserve_dqybe_and_track_step() {
        let (params, lam) = setup(2);
        let r = RMatrixDescriptor::new(BaseKind::Felder, params, pol());
        let same = gauge_scalar(&r, Arc::new(|_| Ok(ONE)));
        let a = r.eval(US[0], &lam).unwrap();
        assert_eq!(same.eval(US[0], &lam).unwrap(), a);
        let trivial = gauge_rescale(&r, ONE, ONE, Weight::zero(2)).unwrap();
        assert_eq!(trivial.eval(US[0], &lam).unwrap(), a);
        let flat = gauge_twoform(&r, Arc::new(|_, _, _| Ok(ONE)));
        assert_eq!(flat.eval(US[0], &lam).unwrap(), a);
        let scaled = gauge_scalar(&r, Arc::new(|u| Ok((u * 3.0).exp())));
        let b = C::new(2.5, 0.3);
        let rescaled = gauge_rescale(&scaled, ONE, b, Weight::from_reals(&[0.1, -0.2, 0.05])).unwrap();
        assert_eq!(rescaled.step, params.gamma() / b);
        let res = dqybe_residual(&rescaled, US[0], US[1], US[2], &lam.scale(ONE / b)).unwrap();
        assert!(res < 1e-9, "{res}");
    }

    #[test]
    fn pipeline_reaches_felder() {
        for n in 1..=3 {
            let (params, lam) = setup(n);
            let rep = equivalence_pipeline(US[0], &lam, &params, &pol()).unwrap();
            assert!(rep.residual < 1e-10, "n={n}: {rep:?}");
            assert!(rep.beta_residual_before_twoform < 1e-10);
            assert!(rep.diagonal_defect_after_scalar < 1e-14);
            assert!((rep.step - rep.expected_step).norm() < 1e-15);
        }
    }

    #[test]
    fn pipeline_stages_solve_dqybe() {
        let (params, lam) = setup(2);
        for stage in equivalence_chain(&params, &pol()).unwrap() {
            let res = dqybe_residual(&stage, US[0], US[1], US[2], &lam).unwrap();
            assert!(res < 1e-9, "{:?}: {res}", stage.gauge_stack);
        }
    }

    #[test]
    fn fusion_matrix_structure() {
        let (params, lam) = setup(3);
        let j = fusion_matrix(&lam, 3, params.q(), &pol()).unwrap();
        let d = triangular_defect(&j);
        assert_eq!(d.diagonal, 0.0);
        assert_eq!(d.upper, 0.0);
        assert!(fusion_exponent_residual(&lam, 3).unwrap() < 1e-14);
    }

    #[test]
    fn fusion_constant_terms_match_fusion_matrix() {
        for n in 1..=3 {
            let (params, lam) = setup(n);
            let rec = fusion_constant_terms(&lam, 0, n, &params, &pol()).unwrap();
            assert!(rec.difference < 1e-12, "{rec:?}");
        }
    }
}
