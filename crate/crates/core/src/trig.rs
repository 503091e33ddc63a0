//! The trigonometric R-matrix R(z) on V(x)⊗V(y), its normalizing scalars
//! ϱ_{n+1}, g, f, and the QYBE, unitarity and crossing checks.

use crate::error::{Error, Result};
use crate::linalg::{embed3, scaled_residual, CMatrix, OperatorVV};
use crate::specfun::{cpower, SpecialValue, TruncationPolicy, C};
use crate::weights::{inner, rho, weight_mu};

const ONE: C = C::new(1.0, 0.0);

fn guard(what: &str, denom: C) -> Result<()> {
    TruncationPolicy::default().guard(what, denom)
}

/// ξ(z) = (1 − z)/(q − z/q).
pub fn xi(z: C, q: C) -> Result<C> {
    let den = q - z / q;
    guard("xi: q - z/q", den)?;
    Ok((ONE - z) / den)
}

/// η(z) = (q − 1/q)/(q − z/q).
pub fn eta(z: C, q: C) -> Result<C> {
    let den = q - z / q;
    guard("eta: q - z/q", den)?;
    Ok((q - ONE / q) / den)
}

/// R(z): fixes v_m⊗v_m; for m < l sends v_m⊗v_l ↦ ξ v_m⊗v_l + zη v_l⊗v_m and
/// v_l⊗v_m ↦ η v_m⊗v_l + ξ v_l⊗v_m.
pub fn rmat_trig(z: C, n: usize, q: C) -> Result<OperatorVV> {
    let x = xi(z, q)?;
    let e = eta(z, q)?;
    let mut r = OperatorVV::zeros(n);
    for m in 0..=n {
        r.set((m, m), (m, m), ONE);
        for l in (m + 1)..=n {
            r.set((m, l), (m, l), x);
            r.set((l, m), (m, l), z * e);
            r.set((m, l), (l, m), e);
            r.set((l, m), (l, m), x);
        }
    }
    Ok(r)
}

/// ϱ_{n+1}(z) = (1−z)(1−zq^{2(n+1)}) / ((1−zq²)(1−zq^{2n})).
pub fn rho_scalar(z: C, n: usize, q: C) -> Result<C> {
    let q2 = q * q;
    let den = (ONE - z * q2) * (ONE - z * q2.powu(n as u32));
    guard("rho_{n+1} denominator", den)?;
    Ok((ONE - z) * (ONE - z * q2.powu(n as u32 + 1)) / den)
}

/// p(z) = (1 − q²)/(1 − q²z).
pub fn p_entry(z: C, q: C) -> Result<C> {
    let q2 = q * q;
    let den = ONE - q2 * z;
    guard("p(z): 1 - q^2 z", den)?;
    Ok((ONE - q2) / den)
}

/// The m×m matrix T_m(z): ones on the diagonal, z·p(z) above it, p(z) below it.
pub fn t_matrix(m: usize, z: C, q: C) -> Result<CMatrix> {
    let pz = p_entry(z, q)?;
    Ok(CMatrix::from_fn(m, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => ONE,
        std::cmp::Ordering::Less => z * pz,
        std::cmp::Ordering::Greater => pz,
    }))
}

/// det T_m = (1 − q^{2m}z)(1 − z)^{m−1}/(1 − q²z)^m.
pub fn det_t_closed(m: usize, z: C, q: C) -> Result<C> {
    if m == 0 {
        return Err(Error::DomainError("det T_m needs m >= 1".into()));
    }
    let q2 = q * q;
    let den = (ONE - q2 * z).powu(m as u32);
    guard("det T_m denominator", den)?;
    Ok((ONE - q2.powu(m as u32) * z) * (ONE - z).powu(m as u32 - 1) / den)
}

/// g(z) = ∏_{j≥0} ϱ_{n+1}(q^{2j(n+1)} z).
pub fn g_scalar(z: C, n: usize, q: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    if !(q.norm() < 1.0) {
        return Err(Error::NonConvergent(format!("g with |q| = {}", q.norm())));
    }
    let step = (q * q).powu(n as u32 + 1);
    let mut w = z;
    let mut prod = ONE;
    for j in 0..policy.max_terms {
        let den = (ONE - w * q * q) * (ONE - w * (q * q).powu(n as u32));
        policy.guard("g: rho_{n+1} factor", den)?;
        let factor = rho_scalar(w, n, q)?;
        prod *= factor;
        let dev = (factor - ONE).norm();
        if dev < policy.tail_tol && w.norm() < 1.0 {
            let err = prod.norm() * dev * 2.0 / (1.0 - step.norm());
            return Ok(SpecialValue::new(prod, err, j + 1));
        }
        w *= step;
    }
    Err(Error::PolicyExhausted {
        terms: policy.max_terms,
        last: (rho_scalar(w, n, q)? - ONE).norm(),
    })
}

/// f_{n+1}(z) = q^{n/(n+1)} g(z), with the principal branch of q^{n/(n+1)}.
pub fn f_scalar(z: C, n: usize, q: C, policy: &TruncationPolicy) -> Result<SpecialValue> {
    let g = g_scalar(z, n, q, policy)?;
    let pre = cpower(q, C::new(n as f64 / (n as f64 + 1.0), 0.0))?;
    Ok(SpecialValue {
        value: pre * g.value,
        est_error: pre.norm() * g.est_error,
        terms_used: g.terms_used,
    })
}

/// Scaled residual of R₁₂(z)R₁₃(zw)R₂₃(w) = R₂₃(w)R₁₃(zw)R₁₂(z) on V⊗V⊗V.
pub fn check_qybe(z: C, w: C, n: usize, q: C) -> Result<f64> {
    let r12 = embed3(&rmat_trig(z, n, q)?, 0, 1);
    let r13 = embed3(&rmat_trig(z * w, n, q)?, 0, 2);
    let r23 = embed3(&rmat_trig(w, n, q)?, 1, 2);
    let lhs = &(&r12 * &r13) * &r23;
    let rhs = &(&r23 * &r13) * &r12;
    Ok(scaled_residual(&lhs, &rhs))
}

/// Scaled residual of P·R(z)·P·R(z⁻¹) = 1.
pub fn check_unitarity(z: C, n: usize, q: C) -> Result<f64> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument("check_unitarity"));
    }
    let p = OperatorVV::flip(n);
    let lhs = p
        .compose(&rmat_trig(z, n, q)?)
        .compose(&p)
        .compose(&rmat_trig(ONE / z, n, q)?);
    Ok(scaled_residual(lhs.matrix(), OperatorVV::identity(n).matrix()))
}

/// Outcome of the crossing check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingCheck {
    /// Scaled sup residual of ϱ(z)·(((R⁻¹)^{t₁})⁻¹)^{t₁} − D R(q^{2(n+1)}z) D⁻¹.
    pub residual: f64,
    /// ϱ read off the v₀⊗v₀ diagonal entries of both sides.
    pub rho_from_diagonal: C,
    /// ϱ from the closed form.
    pub rho_closed: C,
    /// ϱ as det T_{n+1}/det T_n.
    pub rho_from_determinants: C,
}

/// Crossing relation with D = diag(q^{2⟨ρ,μ_i⟩}) ⊗ 1 and the argument shifted by q^{2(n+1)}.
pub fn check_crossing(z: C, n: usize, q: C) -> Result<CrossingCheck> {
    let r = rmat_trig(z, n, q)?;
    let lhs_raw = r
        .inverse()?
        .partial_transpose_first()
        .inverse()?
        .partial_transpose_first();
    let rh = rho(n);
    let ln_q = q.ln();
    let mut d = Vec::with_capacity(n + 1);
    for i in 0..=n {
        d.push((2.0 * inner(&rh, &weight_mu(i, n)?)? * ln_q).exp());
    }
    let dinv: Vec<C> = d.iter().map(|x| ONE / x).collect();
    let shift = (q * q).powu(n as u32 + 1);
    let rhs = OperatorVV::diag_first(&d)
        .compose(&rmat_trig(shift * z, n, q)?)
        .compose(&OperatorVV::diag_first(&dinv));
    let rho_closed = rho_scalar(z, n, q)?;
    let lhs = lhs_raw.scale(rho_closed);
    let l00 = lhs_raw.get((0, 0), (0, 0));
    guard("crossing: v0⊗v0 entry", l00)?;
    let det_n = det_t_closed(n, z, q)?;
    guard("det T_n", det_n)?;
    Ok(CrossingCheck {
        residual: scaled_residual(lhs.matrix(), rhs.matrix()),
        rho_from_diagonal: rhs.get((0, 0), (0, 0)) / l00,
        rho_closed,
        rho_from_determinants: det_t_closed(n + 1, z, q)? / det_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::TruncationPolicy;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    /// Determinant by the Leibniz permutation expansion.
    fn leibniz_det(m: &CMatrix) -> C {
        fn rec(m: &CMatrix, row: usize, used: &mut Vec<bool>) -> C {
            let d = m.dim();
            if row == d {
                return ONE;
            }
            let mut acc = C::new(0.0, 0.0);
            for col in 0..d {
                if used[col] {
                    continue;
                }
                let smaller_free = used[..col].iter().filter(|u| !**u).count();
                let sign = if smaller_free % 2 == 0 { 1.0 } else { -1.0 };
                used[col] = true;
                acc += m[(row, col)] * rec(m, row + 1, used) * sign;
                used[col] = false;
            }
            acc
        }
        rec(m, 0, &mut vec![false; m.dim()])
    }

    #[test]
    fn leibniz_oracle_sanity() {
        let m = CMatrix::from_fn(3, |r, cc| c((r * 3 + cc) as f64 + if r == cc { 1.0 } else { 0.0 }, 0.0));
        // [[1,1,2],[3,5,5],[6,7,9]]: 1·(45−35) − 1·(27−30) + 2·(21−30) = −5.
        assert!((leibniz_det(&m) - c(-5.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn det_t_closed_vs_brute_force() {
        let q = c(0.63, 0.05);
        for m in 1..=6 {
            for z in [c(0.3, 0.7), c(-1.4, 0.2), c(2.5, -0.9)] {
                let t = t_matrix(m, z, q).unwrap();
                let brute = leibniz_det(&t);
                assert!((brute - t.determinant()).norm() <= 1e-12 * brute.norm().max(1e-300));
                let closed = det_t_closed(m, z, q).unwrap();
                assert!((brute - closed).norm() <= 1e-10 * closed.norm().max(1e-300), "m={m}");
            }
        }
    }

    #[test]
    fn rho_is_ratio_of_determinants_and_rank_one_formula() {
        let q = c(0.55, -0.1);
        let z = c(0.4, 1.1);
        for n in 1..5 {
            let r = rho_scalar(z, n, q).unwrap();
            let ratio = det_t_closed(n + 1, z, q).unwrap() / det_t_closed(n, z, q).unwrap();
            assert!((r - ratio).norm() < 1e-13);
            assert_eq!(rho_scalar(c(0.0, 0.0), n, q).unwrap(), c(1.0, 0.0));
        }
        let q2 = q * q;
        let expect = (ONE - z) * (ONE - q2 * q2 * z) / ((ONE - z * q2) * (ONE - z * q2));
        assert!((rho_scalar(z, 1, q).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn trig_block_form() {
        let q = c(0.6, 0.0);
        let z = c(0.35, -0.8);
        let r = rmat_trig(z, 1, q).unwrap();
        let x = (ONE - z) / (q - z / q);
        let e = (q - ONE / q) / (q - z / q);
        let hand = [
            [ONE, c(0., 0.), c(0., 0.), c(0., 0.)],
            [c(0., 0.), x, e, c(0., 0.)],
            [c(0., 0.), z * e, x, c(0., 0.)],
            [c(0., 0.), c(0., 0.), c(0., 0.), ONE],
        ];
        for (i, row) in hand.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((r.matrix()[(i, j)] - v).norm() < 1e-15);
            }
        }
        assert_eq!(r.weight_zero_defect(), 0.0);
        // det of the 2×2 block is ξ² − zη².
        let det = x * x - z * e * e;
        let block = r.get((0, 1), (0, 1)) * r.get((1, 0), (1, 0)) - r.get((0, 1), (1, 0)) * r.get((1, 0), (0, 1));
        assert!((det - block).norm() < 1e-14);
    }

    #[test]
    fn r_at_one_is_flip_on_offdiagonal_blocks() {
        let n = 3;
        let r = rmat_trig(ONE, n, c(0.7, 0.0)).unwrap();
        assert!(r.matrix().sup_diff(OperatorVV::flip(n).matrix()) < 1e-15);
        assert_eq!(check_qybe(ONE, ONE, n, c(0.7, 0.0)).unwrap(), 0.0);
        assert!(check_unitarity(ONE, n, c(0.7, 0.0)).unwrap() < 1e-15);
    }

    #[test]
    fn pole_at_q_squared() {
        let q = c(0.6, 0.0);
        assert!(matches!(rmat_trig(q * q, 2, q), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn qybe_unitarity_crossing() {
        let q = c(0.6, 0.02);
        for n in 1..=3 {
            let z = c(0.3, 0.7);
            let w = c(-0.5, 0.2);
            assert!(check_qybe(z, w, n, q).unwrap() < 1e-12);
            assert!(check_unitarity(z, n, q).unwrap() < 1e-12);
            assert!(check_unitarity(c(1e-3, 2e-3), n, q).unwrap() < 1e-10);
            let cr = check_crossing(z, n, q).unwrap();
            assert!(cr.residual < 1e-10, "n={n} crossing {}", cr.residual);
            assert!((cr.rho_from_diagonal - cr.rho_closed).norm() < 1e-12);
            assert!((cr.rho_from_determinants - cr.rho_closed).norm() < 1e-12);
        }
    }

    #[test]
    fn g_and_f_scalars() {
        let q = c(0.6, 0.0);
        let pol = TruncationPolicy::default();
        for n in 1..=3 {
            let f0 = f_scalar(c(0.0, 0.0), n, q, &pol).unwrap();
            assert!((f0.value - q.powf(n as f64 / (n as f64 + 1.0))).norm() < 1e-15);
            let z = c(0.8, -1.3);
            let g = g_scalar(z, n, q, &pol).unwrap();
            let gs = g_scalar(z * (q * q).powu(n as u32 + 1), n, q, &pol).unwrap();
            assert!((g.value / gs.value - rho_scalar(z, n, q).unwrap()).norm() < 1e-13);
            let gd = g_scalar(z, n, q, &pol.doubled()).unwrap();
            assert!(g.agrees_with(&gd, &pol));
        }
    }
}
