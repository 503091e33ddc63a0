//! Randomized verification suites. Each check draws `samples` generic points,
//! evaluates a residual at each, and keeps the worst one.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::dynamical::{
    dqybe_residual, equivalence_chain, equivalence_pipeline, fusion_constant_terms, fusion_exponent_residual,
    fusion_matrix, triangular_defect, BaseKind, RMatrixDescriptor,
};
use crate::error::{Error, Result};
use crate::exchange::{
    all_entries, checked_expansion_residual, chi, connection_residual, exchange_entries, exchange_rmatrix,
    exchange_rmatrix_monodromy, sigma_coeff, unitarity_residual, EntryRoute, SigmaSpelling,
};
use crate::linalg::scaled_residual;
use crate::qkz::{
    combined_shift_residual, fusion_solution, g_relation_residuals, h_scalar, intertwined_rotation_residual,
    intertwined_solution, qkz_exponents, qkz_residual, reduce_2nd_order, DifferenceSystemData, SecondOrderCoeffs,
};
use crate::sampling::{
    cap, complex_annulus, complex_box, generic_weight, index, is_rejectable, ordered_pair, sample_rng, spectral_u,
    SampleRng, MAX_ATTEMPTS,
};
use crate::specfun::{
    c_const, cpower, double_pochhammer, egamma, heine_residual, qgamma, qhyper_2phi1, qnumber, qpochhammer, theta,
    theta1, track, Order, QBase, SpecialValue, TruncationPolicy, TruncationStats, C, TWO_PI_I,
};
use crate::trig::{check_crossing, check_qybe, check_unitarity, det_t_closed, g_scalar, rho_scalar, t_matrix};
use crate::weights::{varpi, ModelParams, Weight};

const ONE: C = C::new(1.0, 0.0);

/// Relative rounding accumulated over a few hundred double-precision factors.
pub const ROUNDING_FLOOR: f64 = 1e-14;

/// A named group of checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Suite {
    Specfun,
    Trig,
    Qkz,
    Exchange,
    Dqybe,
    Equivalence,
    Fusion,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Specfun,
        Suite::Trig,
        Suite::Qkz,
        Suite::Exchange,
        Suite::Dqybe,
        Suite::Equivalence,
        Suite::Fusion,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Specfun => "specfun",
            Suite::Trig => "trig",
            Suite::Qkz => "qkz",
            Suite::Exchange => "exchange",
            Suite::Dqybe => "dqybe",
            Suite::Equivalence => "equivalence",
            Suite::Fusion => "fusion",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::DomainError(format!("unknown suite '{s}'")))
    }
}

/// Expand a list of suite names, where "all" stands for every suite. Order and
/// duplicates are normalized.
pub fn parse_suites<S: AsRef<str>>(names: &[S]) -> Result<Vec<Suite>> {
    let mut out = Vec::new();
    for name in names {
        let name = name.as_ref().trim();
        if name == "all" {
            out.extend(Suite::ALL);
        } else {
            out.push(name.parse()?);
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Everything a verification run depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub n: usize,
    pub q: C,
    pub kappa: C,
    /// A fixed λ for every sample, or `None` to draw generic λ per sample.
    pub lambda: Option<Weight>,
    pub seed: u64,
    pub samples: usize,
    /// Upper bound applied to every check's own tolerance.
    pub tol: f64,
    pub policy: TruncationPolicy,
}

impl SuiteConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.q, self.kappa)
    }
}

/// A sampled input of a check, kept for the report.
#[derive(Debug, Clone, PartialEq)]
pub enum InputValue {
    Int(i64),
    Real(f64),
    Complex(C),
    Vector(Vec<C>),
}

pub type Inputs = Vec<(String, InputValue)>;

/// One evaluated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub residual: f64,
    pub inputs: Inputs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Fixed(f64),
    /// 10·max(tail_tol, [`ROUNDING_FLOOR`]) of the run's truncation policy.
    DoublingContract,
}

impl Tolerance {
    pub fn resolve(&self, policy: &TruncationPolicy) -> f64 {
        match self {
            Tolerance::Fixed(t) => *t,
            Tolerance::DoublingContract => 10.0 * policy.tail_tol.max(ROUNDING_FLOOR),
        }
    }
}

/// Context handed to each sample.
pub struct Ctx {
    pub params: ModelParams,
    pub lambda: Option<Weight>,
    pub policy: TruncationPolicy,
}

impl Ctx {
    fn lambda(&self, rng: &mut SampleRng) -> Weight {
        match &self.lambda {
            Some(l) => l.clone(),
            None => generic_weight(rng, self.params.n()),
        }
    }

    fn n(&self) -> usize {
        self.params.n()
    }
}

pub type SampleFn = fn(&Ctx, &mut SampleRng) -> Result<Sample>;

/// A registered check.
#[derive(Clone, Copy)]
pub struct CheckSpec {
    pub suite: Suite,
    pub name: &'static str,
    /// The identity being tested, in words.
    pub anchor: &'static str,
    pub tolerance: Tolerance,
    /// Informational checks are reported but never fail a run.
    pub required: bool,
    pub run: SampleFn,
}

impl fmt::Debug for CheckSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CheckSpec")
            .field("suite", &self.suite)
            .field("name", &self.name)
            .field("tolerance", &self.tolerance)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported only.
    Info,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Info => "info",
        }
    }
}

/// Outcome of one check over all its samples.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub suite: Suite,
    pub name: &'static str,
    pub anchor: &'static str,
    pub n: usize,
    /// Inputs of the sample with the largest residual.
    pub inputs: Inputs,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub samples: usize,
    pub worst_sample: Option<usize>,
    /// Draws rejected as non-generic.
    pub rejected: usize,
    pub error: Option<String>,
    pub truncation: TruncationStats,
}

impl CheckRecord {
    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Run one check under `cfg`.
pub fn run_check(spec: &CheckSpec, cfg: &SuiteConfig) -> CheckRecord {
    let tolerance = spec.tolerance.resolve(&cfg.policy).min(cfg.tol);
    let mut rec = CheckRecord {
        suite: spec.suite,
        name: spec.name,
        anchor: spec.anchor,
        n: cfg.n,
        inputs: Vec::new(),
        residual: 0.0,
        tolerance,
        verdict: Verdict::Pass,
        samples: 0,
        worst_sample: None,
        rejected: 0,
        error: None,
        truncation: TruncationStats::default(),
    };
    let params = match cfg.params() {
        Ok(p) => p,
        Err(e) => {
            rec.error = Some(e.to_string());
            rec.verdict = Verdict::Fail;
            return rec;
        }
    };
    let ctx = Ctx {
        params,
        lambda: cfg.lambda.clone(),
        policy: cfg.policy,
    };
    let label = format!("{}/{}", spec.suite.name(), spec.name);
    let (outcome, stats) = track(|| {
        let mut worst: Option<(usize, Sample)> = None;
        let mut rejected = 0usize;
        for i in 0..cfg.samples {
            let mut rng = sample_rng(cfg.seed, &label, i as u64);
            let mut done = None;
            for _ in 0..MAX_ATTEMPTS {
                match (spec.run)(&ctx, &mut rng) {
                    Ok(s) => {
                        done = Some(s);
                        break;
                    }
                    Err(e) if is_rejectable(&e) => rejected += 1,
                    Err(e) => return Err((e.to_string(), worst, rejected)),
                }
            }
            let Some(s) = done else {
                return Err((
                    format!("sample {i}: no generic draw in {MAX_ATTEMPTS} attempts"),
                    worst,
                    rejected,
                ));
            };
            let bigger = match &worst {
                None => true,
                Some((_, w)) => s.residual.is_nan() || s.residual > w.residual,
            };
            if bigger && !worst.as_ref().is_some_and(|(_, w)| w.residual.is_nan()) {
                worst = Some((i, s));
            }
        }
        Ok((worst, rejected))
    });
    rec.truncation = stats;
    rec.samples = cfg.samples;
    let (worst, rejected) = match outcome {
        Ok(x) => x,
        Err((msg, worst, rejected)) => {
            rec.error = Some(msg);
            (worst, rejected)
        }
    };
    rec.rejected = rejected;
    if let Some((i, s)) = worst {
        rec.worst_sample = Some(i);
        rec.residual = s.residual;
        rec.inputs = s.inputs;
    }
    let ok = rec.error.is_none() && rec.residual <= tolerance;
    rec.verdict = if !spec.required {
        Verdict::Info
    } else if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    rec
}

/// Run every check of the selected suites, in registry order.
pub fn run_suites(suites: &[Suite], cfg: &SuiteConfig) -> Vec<CheckRecord> {
    registry()
        .iter()
        .filter(|c| suites.contains(&c.suite))
        .map(|c| run_check(c, cfg))
        .collect()
}

/// Look up a check by suite and name.
pub fn find_check(suite: Suite, name: &str) -> Option<CheckSpec> {
    registry().into_iter().find(|c| c.suite == suite && c.name == name)
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn cx(name: &str, v: C) -> (String, InputValue) {
    (name.to_string(), InputValue::Complex(v))
}

fn int(name: &str, v: usize) -> (String, InputValue) {
    (name.to_string(), InputValue::Int(v as i64))
}

fn wt(name: &str, w: &Weight) -> (String, InputValue) {
    (name.to_string(), InputValue::Vector(w.coords().to_vec()))
}

fn sample(residual: f64, inputs: Inputs) -> Result<Sample> {
    Ok(Sample { residual, inputs })
}

fn nome(rng: &mut SampleRng) -> C {
    complex_annulus(rng, 0.3, 0.8, 2.5)
}

fn point(rng: &mut SampleRng) -> C {
    complex_annulus(rng, 0.3, 3.0, PI - 0.3)
}

macro_rules! check {
    ($suite:ident, $name:literal, $anchor:literal, $tol:expr, $run:expr) => {
        CheckSpec {
            suite: Suite::$suite,
            name: $name,
            anchor: $anchor,
            tolerance: Tolerance::Fixed($tol),
            required: true,
            run: $run,
        }
    };
}

/// All checks, grouped by suite.
pub fn registry() -> Vec<CheckSpec> {
    vec![
        check!(Specfun, "theta_quasi_periodicity", "zΘ(qz;q) = −Θ(z;q), zΘ(z;q) = −qΘ(z/q;q), Θ(qz;q) = Θ(1/z;q)", 1e-10, theta_quasi_periodicity),
        check!(Specfun, "qgamma_reflection", "Γ_q(a)Γ_q(1−a) = C(q)/Θ(q^a;q), Γ_q(1+a) = {a}_qΓ_q(a)", 1e-10, qgamma_reflection),
        check!(Specfun, "qgamma_derived", "Γ_q(a)Γ_q(2−a) and Γ_q(a)Γ_q(−a) through C(q) and Θ", 1e-10, qgamma_derived),
        check!(Specfun, "theta_bridge", "Θ(z;q) = i q^{−1/8} z^{1/2} ϑ₁(u;τ)", 1e-10, theta_bridge),
        check!(Specfun, "heine_equation", "Heine's q-hypergeometric equation for the ₂φ₁ series", 1e-10, heine_equation),
        check!(Specfun, "egamma_symmetry", "Γ_e(u,ζ,σ) = Γ_e(u,σ,ζ)", 1e-10, egamma_symmetry),
        CheckSpec {
            suite: Suite::Specfun,
            name: "truncation_doubling",
            anchor: "every special value is stable under (2·max_terms, tail_tol/10)",
            tolerance: Tolerance::DoublingContract,
            required: true,
            run: truncation_doubling,
        },
        check!(Trig, "qybe", "R₁₂(z)R₁₃(zw)R₂₃(w) = R₂₃(w)R₁₃(zw)R₁₂(z)", 1e-10, trig_qybe),
        check!(Trig, "unitarity", "P R(z) P R(1/z) = 1", 1e-12, trig_unitarity),
        check!(Trig, "crossing", "crossing relation and ϱ(z) from its three routes", 1e-9, trig_crossing),
        check!(Trig, "rho2_closed_form", "ϱ₂(z) = (1−z)(1−q⁴z)/(1−zq²)²", 1e-12, trig_rho2),
        check!(Trig, "det_t_closed_form", "det T_m = (1−q^{2m}z)(1−z)^{m−1}/(1−q²z)^m, m ≤ 6", 1e-10, trig_det_t),
        check!(Trig, "g_telescoping", "g(z)/g(q^{2(n+1)}z) = ϱ_{n+1}(z)", 1e-10, trig_g_telescoping),
        check!(Qkz, "fusion_modified_qkz", "fusion solutions satisfy both modified qKZ equations", 1e-8, qkz_fusion),
        check!(Qkz, "intertwined_modified_qkz", "intertwined solutions satisfy both modified qKZ equations", 1e-8, qkz_intertwined),
        check!(Qkz, "difference_equations", "ψ₁ solves the second-order equation, (ψ₁, ψ₂) the first-order system", 1e-8, qkz_difference),
        check!(Qkz, "exponents", "exponents (u, r, s, t) of the second-order reduction", 1e-10, qkz_exponent_check),
        check!(Qkz, "g_relations", "G(x,y) = f(y/x)G(px,y), G(x,py) = f(py/x)G(x,y)", 1e-10, qkz_g_relations),
        check!(Qkz, "expansion_cancellation", "degree-zero coefficients and the cancelling term of ψ₂", 1e-10, qkz_cancellation),
        check!(Exchange, "connection_formula", "₂φ₁(p^r,p^s,p^t;p,z) = Λ(z)g₁(z) + Ω(z)g₂(z) for |z| in (1.2, 3)", 1e-8, ex_connection),
        check!(Exchange, "two_route_rmatrix", "closed-form R_k(u,λ) = f(1/z)·(twisted exchange matrix)·P", 1e-8, ex_two_route),
        check!(Exchange, "beta_theta_forms", "β^{m,l}, β^{l,m} as Θ-only ratios", 1e-10, ex_beta_theta),
        check!(Exchange, "entry_forms", "α, β agree across Γ_p/Θ, Θ-only, shifted ϑ₁ and closed ϑ₁ forms", 1e-10, ex_entry_forms),
        check!(Exchange, "sigma_reciprocal", "σ_{m,l}σ_{l,m} = 1 and both spellings of σ agree", 1e-12, ex_sigma),
        check!(Exchange, "checked_expansion", "checked expectation values expand through the connection coefficients", 1e-8, ex_checked_expansion),
        check!(Exchange, "chi_factorization", "f(1/z)h(z)/h(1/z) = q^{n/(n+1)}Γ_e(−u+τ)Γ_e(u+γ)/(Γ_e(−u+τ+γ)Γ_e(u))", 1e-8, ex_chi),
        check!(Exchange, "chi_factors", "each lattice product P_i equals its elliptic-gamma form", 1e-8, ex_chi_factors),
        check!(Dqybe, "felder", "dynamical Yang–Baxter equation for Felder's R, step γ", 1e-8, dq_felder),
        check!(Dqybe, "exchange", "dynamical Yang–Baxter equation for R_k, step 1", 1e-8, dq_exchange),
        check!(Equivalence, "pipeline", "χ⁻¹, (1, 1/γ, −ρ) rescaling and σ two-form take R_k to Felder's R", 1e-8, eq_pipeline),
        check!(Equivalence, "gauge_stages", "each stage of the gauge chain solves its dynamical Yang–Baxter equation", 1e-8, eq_stages),
        check!(Equivalence, "unitary_exchange", "B^{21}(z,λ)B(1/z,λ) = 1", 1e-8, eq_unitary),
        check!(Fusion, "triangular", "J(λ) is triangular with unit diagonal", 0.0, fu_triangular),
        check!(Fusion, "exponent_identity", "2(λ_i−λ_j+j−i) = 2⟨λ+ρ, μ_i−μ_j⟩", 1e-12, fu_exponent),
        CheckSpec {
            suite: Suite::Fusion,
            name: "constant_terms",
            anchor: "degree-zero coefficients of the fusion solutions against the columns of J(λ)",
            tolerance: Tolerance::Fixed(1e-10),
            required: false,
            run: fu_constant_terms,
        },
    ]
}

fn theta_quasi_periodicity(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let q = nome(rng);
    let z = point(rng);
    let th = |x: C| theta(x, q, &ctx.policy).map(|v| v.value);
    let (t, tq, ti, tdq) = (th(z)?, th(q * z)?, th(z.inv())?, th(z / q)?);
    let r = [rel(z * tq, -t), rel(z * t, -q * tdq), rel(tq, ti)].into_iter().fold(0.0, f64::max);
    sample(r, vec![cx("q", q), cx("z", z)])
}

fn qgamma_reflection(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let q = nome(rng);
    let a = complex_box(rng, (-1.5, 2.5), (-0.5, 0.5));
    let base = QBase::new(q)?;
    let g = |x: C| qgamma(x, &base, &ctx.policy).map(|v| v.value);
    let c = c_const(q, &ctx.policy)?.value;
    let th = theta(base.pow(a), q, &ctx.policy)?.value;
    ctx.policy.guard("Theta(q^a)", th)?;
    let r1 = rel(g(a)? * g(ONE - a)?, c / th);
    let r2 = rel(g(ONE + a)?, qnumber(a, &base) * g(a)?);
    sample(r1.max(r2), vec![cx("q", q), cx("a", a)])
}

fn qgamma_derived(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let q = nome(rng);
    let a = complex_box(rng, (-1.5, 2.5), (-0.5, 0.5));
    let base = QBase::new(q)?;
    let pol = &ctx.policy;
    let g = |x: C| qgamma(x, &base, pol).map(|v| v.value);
    let th = |x: C| -> Result<C> {
        let t = theta(base.pow(x), q, pol)?.value;
        pol.guard("Theta(q^x)", t)?;
        Ok(t)
    };
    let c = c_const(q, pol)?.value;
    let qn = |x: C| qnumber(x, &base);
    let two = C::new(2.0, 0.0);
    let lhs1 = g(a)? * g(two - a)?;
    let r1 = rel(lhs1, qn(ONE - a) * c / th(a)?).max(rel(lhs1, qn(a - ONE) * c / th(two - a)?));
    let lhs2 = g(a)? * g(-a)?;
    let r2 = rel(lhs2, c / (qn(-a) * th(a)?)).max(rel(lhs2, c / (qn(a) * th(-a)?)));
    sample(r1.max(r2), vec![cx("q", q), cx("a", a)])
}

fn theta_bridge(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let tau = complex_box(rng, (-0.4, 0.4), (0.3, 1.2));
    let u = complex_box(rng, (-0.4, 0.4), (-0.3, 0.3));
    let q = (TWO_PI_I * tau).exp();
    let z = (-TWO_PI_I * u).exp();
    let lhs = theta(z, q, &ctx.policy)?.value;
    let rhs = C::new(0.0, 1.0)
        * cpower(q, C::new(-0.125, 0.0))?
        * cpower(z, C::new(0.5, 0.0))?
        * theta1(u, tau, &ctx.policy)?.value;
    sample(rel(lhs, rhs), vec![cx("tau", tau), cx("u", u)])
}

fn heine_params(rng: &mut SampleRng) -> (C, C, C) {
    (
        complex_box(rng, (-0.8, 0.8), (-0.3, 0.3)),
        complex_box(rng, (-0.8, 0.8), (-0.3, 0.3)),
        complex_box(rng, (-0.8, 0.8), (-0.3, 0.3)),
    )
}

fn heine_equation(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let p = complex_annulus(rng, 0.2, 0.7, 2.5);
    let (r, s, t) = heine_params(rng);
    let z = complex_annulus(rng, 0.05, 0.5, PI);
    let base = QBase::new(p)?;
    let f0 = qhyper_2phi1(r, s, t, &base, z, &ctx.policy)?.value;
    let res = heine_residual(r, s, t, &base, z, |w| qhyper_2phi1(r, s, t, &base, w, &ctx.policy).map(|v| v.value))?;
    sample(
        res.norm() / f0.norm().max(1.0),
        vec![cx("p", p), cx("r", r), cx("s", s), cx("t", t), cx("z", z)],
    )
}

fn egamma_symmetry(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let zeta = complex_box(rng, (-0.3, 0.3), (0.15, 0.6));
    let sigma = complex_box(rng, (-0.3, 0.3), (0.15, 0.6));
    let u = complex_box(rng, (-0.4, 0.4), (-0.1, 0.1));
    let a = egamma(u, zeta, sigma, &ctx.policy)?.value;
    let b = egamma(u, sigma, zeta, &ctx.policy)?.value;
    sample(rel(a, b), vec![cx("u", u), cx("zeta", zeta), cx("sigma", sigma)])
}

fn truncation_doubling(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let q = nome(rng);
    let z = point(rng);
    let a = complex_box(rng, (-1.5, 2.5), (-0.5, 0.5));
    let tau = complex_box(rng, (-0.4, 0.4), (0.3, 1.2));
    let u = complex_box(rng, (-0.4, 0.4), (-0.1, 0.1));
    let (r, s, t) = heine_params(rng);
    let w = complex_annulus(rng, 0.05, 0.5, PI);
    let base = QBase::new(q)?;
    let params = &ctx.params;
    let n = params.n();
    let sigma = tau;
    let zeta = (n as f64 + 1.0) * params.gamma();
    let b = complex_annulus(rng, 0.2, 0.7, 2.5);
    let eval = |pol: &TruncationPolicy| -> Result<Vec<SpecialValue>> {
        Ok(vec![
            qpochhammer(z, q, Order::Infinite, pol)?,
            theta(z, q, pol)?,
            theta1(u, tau, pol)?,
            qgamma(a, &base, pol)?,
            egamma(u, zeta, sigma, pol)?,
            qhyper_2phi1(r, s, t, &base, w, pol)?,
            double_pochhammer(z, q, b, pol)?,
            g_scalar(z, n, params.q(), pol)?,
            h_scalar(z, params, pol)?,
        ])
    };
    let v1 = eval(&ctx.policy)?;
    let v2 = eval(&ctx.policy.doubled())?;
    let worst = v1.iter().zip(&v2).map(|(x, y)| rel(x.value, y.value)).fold(0.0, f64::max);
    sample(
        worst,
        vec![cx("q", q), cx("z", z), cx("a", a), cx("tau", tau), cx("u", u), cx("w", w), cx("b", b)],
    )
}

fn trig_qybe(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let (z, w) = (point(rng), point(rng));
    let r = check_qybe(z, w, ctx.n(), ctx.params.q())?;
    sample(r, vec![cx("z", z), cx("w", w)])
}

fn trig_unitarity(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let z = point(rng);
    sample(check_unitarity(z, ctx.n(), ctx.params.q())?, vec![cx("z", z)])
}

fn trig_crossing(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let z = point(rng);
    let c = check_crossing(z, ctx.n(), ctx.params.q())?;
    let r = c
        .residual
        .max(rel(c.rho_from_diagonal, c.rho_closed))
        .max(rel(c.rho_from_determinants, c.rho_closed));
    sample(r, vec![cx("z", z)])
}

fn trig_rho2(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let z = point(rng);
    let q = ctx.params.q();
    let q2 = q * q;
    let den = (ONE - z * q2) * (ONE - z * q2);
    ctx.policy.guard("(1 - zq^2)^2", den)?;
    let closed = (ONE - z) * (ONE - q2 * q2 * z) / den;
    sample(rel(rho_scalar(z, 1, q)?, closed), vec![cx("z", z)])
}

fn trig_det_t(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let z = point(rng);
    let q = ctx.params.q();
    let mut worst: f64 = 0.0;
    for m in 1..=6 {
        let closed = det_t_closed(m, z, q)?;
        let direct = t_matrix(m, z, q)?.determinant();
        worst = worst.max((closed - direct).norm() / closed.norm().max(f64::MIN_POSITIVE));
    }
    sample(worst, vec![cx("z", z)])
}

fn trig_g_telescoping(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let z = point(rng);
    let (n, q) = (ctx.n(), ctx.params.q());
    let step = (q * q).powu(n as u32 + 1);
    let a = g_scalar(z, n, q, &ctx.policy)?.value;
    let b = g_scalar(step * z, n, q, &ctx.policy)?.value;
    ctx.policy.guard("g(q^{2(n+1)}z)", b)?;
    sample(rel(a / b, rho_scalar(z, n, q)?), vec![cx("z", z)])
}

/// x with |x| ∈ [1.5, 3) and y with |y| ∈ [0.3, 0.7): the large argument first.
fn qkz_points(rng: &mut SampleRng) -> (C, C) {
    (complex_annulus(rng, 1.5, 3.0, 2.5), complex_annulus(rng, 0.3, 0.7, 2.5))
}

fn qkz_pair(ctx: &Ctx, rng: &mut SampleRng) -> (usize, usize, u8) {
    let m = index(rng, ctx.n());
    let l = m + index(rng, ctx.n() - m);
    let branch = 1 + index(rng, 1) as u8;
    (m, l, branch)
}

fn qkz_fusion(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (m, l, branch) = qkz_pair(ctx, rng);
    let (a, b) = qkz_points(rng);
    let sol = fusion_solution(m, l, branch, &lam, &ctx.params, &ctx.policy)?;
    let (r1, r2) = qkz_residual(&sol, a, b)?;
    let r3 = combined_shift_residual(&sol, a, b)?;
    sample(
        r1.max(r2).max(r3),
        vec![wt("lambda", &lam), int("m", m), int("l", l), int("branch", branch as usize), cx("x", a), cx("y", b)],
    )
}

fn qkz_intertwined(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (m, l, branch) = qkz_pair(ctx, rng);
    let (y, x) = qkz_points(rng);
    let sol = intertwined_solution(m, l, branch, &lam, &ctx.params, &ctx.policy)?;
    let (r1, r2) = qkz_residual(&sol, y, x)?;
    let r3 = combined_shift_residual(&sol, y, x)?;
    let r4 = intertwined_rotation_residual(&sol, x, y)?;
    sample(
        r1.max(r2).max(r3).max(r4),
        vec![wt("lambda", &lam), int("m", m), int("l", l), int("branch", branch as usize), cx("x", x), cx("y", y)],
    )
}

fn qkz_difference(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let branch = 1 + index(rng, 1) as u8;
    let z_far = complex_annulus(rng, 1.2, 2.5, 2.5);
    let z_near = complex_annulus(rng, 0.1, 0.3, 2.5);
    let f = fusion_solution(m, l, branch, &lam, &ctx.params, &ctx.policy)?;
    let it = intertwined_solution(m, l, branch, &lam, &ctx.params, &ctx.policy)?;
    let r = f
        .second_order_residual(z_far)?
        .max(f.first_order_residual(z_far)?)
        .max(it.second_order_residual(z_near)?)
        .max(it.first_order_residual(z_near)?);
    sample(
        r,
        vec![
            wt("lambda", &lam),
            int("m", m),
            int("l", l),
            int("branch", branch as usize),
            cx("z_fusion", z_far),
            cx("z_intertwined", z_near),
        ],
    )
}

fn qkz_exponent_check(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let vp = varpi(&lam, m, l, &ctx.params)?;
    let pb = ctx.params.p_base();
    let data = reduce_2nd_order(SecondOrderCoeffs::qkz(vp, &ctx.params), &pb)?;
    let printed = qkz_exponents(vp, ctx.params.kappa());
    let lp = ctx.params.ln_p();
    let tol = 1e-9;
    let s = &data.solutions;
    let matched = (s[0].congruent(&printed[0], lp, tol) && s[1].congruent(&printed[1], lp, tol))
        || (s[0].congruent(&printed[1], lp, tol) && s[1].congruent(&printed[0], lp, tol));
    let printed_data = DifferenceSystemData {
        coeffs: data.coeffs,
        solutions: printed,
    };
    let r = data.defining_residual(&pb).max(printed_data.defining_residual(&pb));
    let r = if matched { r } else { r.max(1.0) };
    sample(r, vec![wt("lambda", &lam), int("m", m), int("l", l)])
}

fn qkz_g_relations(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let (x, y) = (point(rng), point(rng));
    let (r1, r2) = g_relation_residuals(x, y, &ctx.params, &ctx.policy)?;
    sample(r1.max(r2), vec![cx("x", x), cx("y", y)])
}

fn qkz_cancellation(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let e1 = fusion_solution(m, l, 1, &lam, &ctx.params, &ctx.policy)?.fusion_expansion()?;
    let e2 = fusion_solution(m, l, 2, &lam, &ctx.params, &ctx.policy)?.fusion_expansion()?;
    let r = [
        (e1.constant[0] - ONE).norm(),
        e1.cancelled.norm(),
        e2.constant[0].norm(),
        (e2.constant[1] - ONE).norm(),
        e2.cancelled.norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    sample(r, vec![wt("lambda", &lam), int("m", m), int("l", l)])
}

fn ex_connection(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let (r, s, t) = heine_params(rng);
    let z = complex_annulus(rng, 1.2, 3.0, PI - 0.2);
    let c = connection_residual(r, s, t, &ctx.params.p_base(), z, &ctx.policy)?;
    cap(c.lambda.norm().max(c.omega.norm()), "connection coefficients")?;
    sample(c.residual, vec![cx("r", r), cx("s", s), cx("t", t), cx("z", z)])
}

fn generic_entries(ctx: &Ctx, u: C, lam: &Weight) -> Result<()> {
    for e in all_entries(EntryRoute::Closed, u, lam, &ctx.params, &ctx.policy)? {
        cap(e.max_abs(), "exchange entry")?;
    }
    Ok(())
}

fn ex_two_route(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let u = spectral_u(rng);
    generic_entries(ctx, u, &lam)?;
    let a = exchange_rmatrix(u, &lam, &ctx.params, &ctx.policy)?;
    let b = exchange_rmatrix_monodromy(u, &lam, &ctx.params, &ctx.policy)?;
    sample(scaled_residual(a.matrix(), b.matrix()), vec![wt("lambda", &lam), cx("u", u)])
}

fn ex_beta_theta(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let u = spectral_u(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let a = exchange_entries(EntryRoute::GammaTheta, u, &lam, m, l, &ctx.params, &ctx.policy)?;
    cap(a.max_abs(), "exchange entry")?;
    let b = exchange_entries(EntryRoute::ThetaOnly, u, &lam, m, l, &ctx.params, &ctx.policy)?;
    sample(a.beta_diff(&b), vec![wt("lambda", &lam), cx("u", u), int("m", m), int("l", l)])
}

fn ex_entry_forms(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let u = spectral_u(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let reference = exchange_entries(EntryRoute::GammaTheta, u, &lam, m, l, &ctx.params, &ctx.policy)?;
    cap(reference.max_abs(), "exchange entry")?;
    let mut worst: f64 = 0.0;
    for route in EntryRoute::ALL {
        let e = exchange_entries(route, u, &lam, m, l, &ctx.params, &ctx.policy)?;
        worst = worst.max(reference.max_diff(&e));
    }
    sample(worst, vec![wt("lambda", &lam), cx("u", u), int("m", m), int("l", l)])
}

fn ex_sigma(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let s = |a, b, sp| sigma_coeff(&lam, a, b, sp, &ctx.params, &ctx.policy);
    let lm = s(l, m, SigmaSpelling::Varpi)?;
    let ml = s(m, l, SigmaSpelling::Varpi)?;
    cap(lm.norm().max(ml.norm()), "sigma")?;
    let lm2 = s(l, m, SigmaSpelling::ShiftedWeight)?;
    let r = (lm * ml - ONE).norm().max(rel(lm, lm2));
    sample(r, vec![wt("lambda", &lam), int("m", m), int("l", l)])
}

fn ex_checked_expansion(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let u = spectral_u(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let e = exchange_entries(EntryRoute::GammaTheta, u, &lam, m, l, &ctx.params, &ctx.policy)?;
    cap(e.max_abs(), "exchange entry")?;
    let r = checked_expansion_residual(u, &lam, m, l, &ctx.params, &ctx.policy)?;
    sample(r, vec![wt("lambda", &lam), cx("u", u), int("m", m), int("l", l)])
}

fn ex_chi(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let u = spectral_u(rng);
    let c = chi(u, &ctx.params, &ctx.policy)?;
    let r = c.difference.max(rel(c.via_lattice, c.via_egamma.value));
    sample(r, vec![cx("u", u)])
}

fn ex_chi_factors(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let u = spectral_u(rng);
    let c = chi(u, &ctx.params, &ctx.policy)?;
    let r = c.factors.iter().map(|f| f.difference()).fold(0.0, f64::max);
    sample(r, vec![cx("u", u)])
}

fn spectral_triple(rng: &mut SampleRng) -> (C, C, C) {
    (spectral_u(rng), spectral_u(rng), spectral_u(rng))
}

fn dqybe_sample(ctx: &Ctx, rng: &mut SampleRng, kind: BaseKind) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (u1, u2, u3) = spectral_triple(rng);
    if kind == BaseKind::Exchange {
        for u in [u1 - u2, u1 - u3, u2 - u3] {
            generic_entries(ctx, u, &lam)?;
        }
    }
    let r = RMatrixDescriptor::new(kind, ctx.params, ctx.policy);
    let res = dqybe_residual(&r, u1, u2, u3, &lam)?;
    sample(res, vec![wt("lambda", &lam), cx("u1", u1), cx("u2", u2), cx("u3", u3)])
}

fn dq_felder(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    dqybe_sample(ctx, rng, BaseKind::Felder)
}

fn dq_exchange(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    dqybe_sample(ctx, rng, BaseKind::Exchange)
}

fn eq_pipeline(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let u = spectral_u(rng);
    let rescaled = &lam.scale(ONE / ctx.params.gamma()) - &crate::weights::rho(ctx.n());
    generic_entries(ctx, u, &rescaled)?;
    let rep = equivalence_pipeline(u, &lam, &ctx.params, &ctx.policy)?;
    let r = rep
        .residual
        .max(rep.beta_residual_before_twoform)
        .max(rep.diagonal_defect_after_scalar)
        .max((rep.step - rep.expected_step).norm());
    sample(r, vec![wt("lambda", &lam), cx("u", u)])
}

fn eq_stages(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (u1, u2, u3) = spectral_triple(rng);
    let rescaled = &lam.scale(ONE / ctx.params.gamma()) - &crate::weights::rho(ctx.n());
    for u in [u1 - u2, u1 - u3, u2 - u3] {
        generic_entries(ctx, u, &lam)?;
        generic_entries(ctx, u, &rescaled)?;
    }
    let mut worst: f64 = 0.0;
    for (i, stage) in equivalence_chain(&ctx.params, &ctx.policy)?.iter().enumerate() {
        // stages after the rescaling take λ on Felder's scale
        let l = if i >= 2 { &lam } else { &rescaled };
        worst = worst.max(dqybe_residual(stage, u1, u2, u3, l)?);
    }
    sample(worst, vec![wt("lambda", &lam), cx("u1", u1), cx("u2", u2), cx("u3", u3)])
}

fn eq_unitary(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let u = spectral_u(rng);
    generic_entries(ctx, u, &lam)?;
    generic_entries(ctx, -u, &lam)?;
    sample(unitarity_residual(u, &lam, &ctx.params, &ctx.policy)?, vec![wt("lambda", &lam), cx("u", u)])
}

fn fu_triangular(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let j = fusion_matrix(&lam, ctx.n(), ctx.params.q(), &ctx.policy)?;
    let d = triangular_defect(&j);
    sample(d.diagonal.max(d.upper), vec![wt("lambda", &lam)])
}

fn fu_exponent(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    sample(fusion_exponent_residual(&lam, ctx.n())?, vec![wt("lambda", &lam)])
}

fn fu_constant_terms(ctx: &Ctx, rng: &mut SampleRng) -> Result<Sample> {
    let lam = ctx.lambda(rng);
    let (m, l) = ordered_pair(rng, ctx.n());
    let rec = fusion_constant_terms(&lam, m, l, &ctx.params, &ctx.policy)?;
    sample(
        rec.difference,
        vec![
            wt("lambda", &lam),
            int("m", m),
            int("l", l),
            cx("series_offdiagonal", rec.series[0][1]),
            cx("fusion_offdiagonal", rec.fusion[0][1]),
            cx("ratio", rec.ratio),
        ],
    )
}
