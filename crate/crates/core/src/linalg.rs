//! Small dense complex matrices: products, LU inversion with a condition guard,
//! partial transposes on V⊗V and embeddings into V⊗V⊗V.

use crate::error::{Error, Result};
use crate::specfun::C;
use std::fmt;
use std::ops::{Index, IndexMut, Mul, Sub};

/// Inversions whose estimated condition number exceeds this are refused.
pub const CONDITION_LIMIT: f64 = 1e12;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Dense row-major square complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{}", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|c| format!("{:.4e}", self[(r, c)])).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn diagonal(d: &[C]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, x) in d.iter().enumerate() {
            m[(i, i)] = *x;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<C>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn scale(&self, c: C) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    /// Largest entry magnitude.
    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    /// Sup-norm of the difference.
    pub fn sup_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max row sum of magnitudes.
    pub fn inf_norm(&self) -> f64 {
        self.data
            .chunks(self.dim)
            .map(|r| r.iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        assert_eq!(v.len(), self.dim);
        self.data
            .chunks(self.dim)
            .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> C {
        let n = self.dim;
        let mut a = self.clone();
        let mut det = ONE;
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
                .unwrap_or(col);
            if a[(piv, col)] == ZERO {
                return ZERO;
            }
            if piv != col {
                for c in 0..n {
                    a.data.swap(piv * n + c, col * n + c);
                }
                det = -det;
            }
            let d = a[(col, col)];
            det *= d;
            for r in (col + 1)..n {
                let f = a[(r, col)] / d;
                for c in col..n {
                    let x = a[(col, c)];
                    a[(r, c)] -= f * x;
                }
            }
        }
        det
    }

    /// Inverse via LU with partial pivoting; refuses singular or badly conditioned input.
    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.dim;
        let mut a = self.clone();
        let mut inv = CMatrix::identity(n);
        let scale = self.inf_norm();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
                .unwrap_or(col);
            if a[(piv, col)].norm() <= f64::EPSILON * scale {
                return Err(Error::IllConditioned(f64::INFINITY));
            }
            if piv != col {
                for c in 0..n {
                    a.data.swap(piv * n + c, col * n + c);
                    inv.data.swap(piv * n + c, col * n + c);
                }
            }
            let d = a[(col, col)];
            for r in (col + 1)..n {
                let f = a[(r, col)] / d;
                if f == ZERO {
                    continue;
                }
                for c in 0..n {
                    let (x, y) = (a[(col, c)], inv[(col, c)]);
                    a[(r, c)] -= f * x;
                    inv[(r, c)] -= f * y;
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[(col, col)];
            for c in 0..n {
                inv[(col, c)] /= d;
            }
            for r in 0..col {
                let f = a[(r, col)];
                if f == ZERO {
                    continue;
                }
                for c in 0..n {
                    let y = inv[(col, c)];
                    inv[(r, c)] -= f * y;
                }
            }
        }
        let cond = scale * inv.inf_norm();
        if !(cond <= CONDITION_LIMIT) {
            return Err(Error::IllConditioned(cond));
        }
        Ok(inv)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C;
    fn index(&self, (r, c): (usize, usize)) -> &C {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * rhs.data[k * n + c];
                }
            }
        }
        out
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Scaled residual sup|A − B| / max(1, sup|A|, sup|B|).
pub fn scaled_residual(a: &CMatrix, b: &CMatrix) -> f64 {
    a.sup_diff(b) / a.sup_norm().max(b.sup_norm()).max(1.0)
}

/// Operator on V⊗V with dim V = n+1; basis vector v_i⊗v_j sits at index i·(n+1)+j.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorVV {
    n: usize,
    m: CMatrix,
}

impl OperatorVV {
    pub fn zeros(n: usize) -> Self {
        OperatorVV {
            n,
            m: CMatrix::zeros((n + 1) * (n + 1)),
        }
    }

    pub fn identity(n: usize) -> Self {
        OperatorVV {
            n,
            m: CMatrix::identity((n + 1) * (n + 1)),
        }
    }

    pub fn from_matrix(n: usize, m: CMatrix) -> Result<Self> {
        let d = (n + 1) * (n + 1);
        if m.dim() != d {
            return Err(Error::LengthMismatch(m.dim(), d));
        }
        Ok(OperatorVV { n, m })
    }

    /// The flip P(v_i⊗v_j) = v_j⊗v_i.
    pub fn flip(n: usize) -> Self {
        let mut op = Self::zeros(n);
        for i in 0..=n {
            for j in 0..=n {
                op.set((j, i), (i, j), ONE);
            }
        }
        op
    }

    /// D ⊗ 1 for a diagonal D on V.
    pub fn diag_first(d: &[C]) -> Self {
        let n = d.len() - 1;
        let mut op = Self::zeros(n);
        for (i, &di) in d.iter().enumerate() {
            for j in 0..=n {
                op.set((i, j), (i, j), di);
            }
        }
        op
    }

    /// 1 ⊗ D for a diagonal D on V.
    pub fn diag_second(d: &[C]) -> Self {
        let n = d.len() - 1;
        let mut op = Self::zeros(n);
        for i in 0..=n {
            for (j, &dj) in d.iter().enumerate() {
                op.set((i, j), (i, j), dj);
            }
        }
        op
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * (self.n + 1) + j
    }

    /// Coefficient of v_{row.0}⊗v_{row.1} in the image of v_{col.0}⊗v_{col.1}.
    pub fn get(&self, row: (usize, usize), col: (usize, usize)) -> C {
        self.m[(self.index(row.0, row.1), self.index(col.0, col.1))]
    }

    pub fn set(&mut self, row: (usize, usize), col: (usize, usize), v: C) {
        let (r, c) = (self.index(row.0, row.1), self.index(col.0, col.1));
        self.m[(r, c)] = v;
    }

    pub fn scale(&self, c: C) -> Self {
        OperatorVV {
            n: self.n,
            m: self.m.scale(c),
        }
    }

    pub fn compose(&self, other: &OperatorVV) -> OperatorVV {
        OperatorVV {
            n: self.n,
            m: &self.m * &other.m,
        }
    }

    pub fn inverse(&self) -> Result<OperatorVV> {
        Ok(OperatorVV {
            n: self.n,
            m: self.m.inverse()?,
        })
    }

    /// Transpose in the first tensor factor: entry ((i,j),(k,l)) moves to ((k,j),(i,l)).
    pub fn partial_transpose_first(&self) -> OperatorVV {
        let d = self.n + 1;
        let mut out = Self::zeros(self.n);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        out.set((k, j), (i, l), self.get((i, j), (k, l)));
                    }
                }
            }
        }
        out
    }

    /// Largest entry connecting v_i⊗v_j to v_k⊗v_l with {i,j} ≠ {k,l} as multisets.
    pub fn weight_zero_defect(&self) -> f64 {
        let d = self.n + 1;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let same = (i == k && j == l) || (i == l && j == k);
                        if !same {
                            worst = worst.max(self.get((i, j), (k, l)).norm());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Embed an operator on V⊗V into V⊗V⊗V acting on tensor slots `a < b`;
/// basis v_i⊗v_j⊗v_k sits at ((i·d)+j)·d+k.
pub fn embed3(op: &OperatorVV, a: usize, b: usize) -> CMatrix {
    embed3_with(op.n(), a, b, |_| op)
}

/// Like [`embed3`] but the operator may depend on the basis index carried by the
/// remaining slot (used for dynamical shifts).
pub fn embed3_with<'a>(n: usize, a: usize, b: usize, mut op_for: impl FnMut(usize) -> &'a OperatorVV) -> CMatrix {
    assert!(a < b && b < 3, "slots must satisfy a < b < 3");
    let d = n + 1;
    let spectator = 3 - a - b;
    let mut out = CMatrix::zeros(d * d * d);
    let flat = |idx: [usize; 3]| (idx[0] * d + idx[1]) * d + idx[2];
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                let idx = [i, j, k];
                let op = op_for(idx[spectator]);
                let col = flat(idx);
                for x in 0..d {
                    for y in 0..d {
                        let v = op.get((x, y), (idx[a], idx[b]));
                        if v != ZERO {
                            let mut new = idx;
                            new[a] = x;
                            new[b] = y;
                            out[(flat(new), col)] += v;
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(dim: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        CMatrix::from_fn(dim, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            C::new(a, b)
        })
    }

    #[test]
    fn inverse_round_trip() {
        for dim in [1, 2, 4, 9, 16] {
            let m = sample(dim, dim as u64 + 3);
            let inv = m.inverse().unwrap();
            assert!((&m * &inv).sup_diff(&CMatrix::identity(dim)) < 1e-10);
            assert!((&inv * &m).sup_diff(&CMatrix::identity(dim)) < 1e-10);
        }
    }

    #[test]
    fn determinant_of_triangular_and_permuted() {
        let mut m = CMatrix::zeros(3);
        m[(0, 1)] = C::new(2.0, 0.0);
        m[(1, 0)] = C::new(3.0, 0.0);
        m[(2, 2)] = C::new(0.0, 1.0);
        assert!((m.determinant() - C::new(0.0, -6.0)).norm() < 1e-15);
        let a = sample(5, 9);
        let b = sample(5, 10);
        assert!(((&a * &b).determinant() - a.determinant() * b.determinant()).norm() < 1e-12);
    }

    #[test]
    fn singular_is_refused() {
        let mut m = sample(4, 1);
        for c in 0..4 {
            let v = m[(0, c)];
            m[(1, c)] = v * 2.0;
        }
        assert!(matches!(m.inverse(), Err(Error::IllConditioned(_))));
        assert!(matches!(CMatrix::zeros(3).inverse(), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn flip_squares_to_identity() {
        for n in 1..4 {
            let p = OperatorVV::flip(n);
            assert_eq!(p.compose(&p), OperatorVV::identity(n));
        }
    }

    #[test]
    fn partial_transpose_is_involution_and_fixes_product_of_symmetric() {
        let n = 2;
        let op = OperatorVV::from_matrix(n, sample(9, 7)).unwrap();
        assert_eq!(op.partial_transpose_first().partial_transpose_first(), op);
        // (A⊗B)^{t1} = A^t ⊗ B.
        let a = sample(3, 11);
        let b = sample(3, 12);
        let kron = |x: &CMatrix, y: &CMatrix| {
            let mut o = OperatorVV::zeros(n);
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            o.set((i, j), (k, l), x[(i, k)] * y[(j, l)]);
                        }
                    }
                }
            }
            o
        };
        let at = CMatrix::from_fn(3, |r, c| a[(c, r)]);
        assert_eq!(kron(&a, &b).partial_transpose_first(), kron(&at, &b));
    }

    #[test]
    fn embedding_of_flip_composes_to_permutations() {
        let n = 1;
        let p = OperatorVV::flip(n);
        let p12 = embed3(&p, 0, 1);
        let p23 = embed3(&p, 1, 2);
        let p13 = embed3(&p, 0, 2);
        // Braid relation of transpositions and P13 = P12 P23 P12.
        assert_eq!(&(&p12 * &p23) * &p12, &(&p23 * &p12) * &p23);
        assert_eq!(p13, &(&p12 * &p23) * &p12);
    }

    #[test]
    fn weight_zero_defect_detects_mixing() {
        let mut op = OperatorVV::identity(2);
        assert_eq!(op.weight_zero_defect(), 0.0);
        op.set((0, 1), (1, 0), C::new(3.0, 0.0));
        assert_eq!(op.weight_zero_defect(), 0.0);
        op.set((0, 0), (1, 2), C::new(0.5, 0.0));
        assert_eq!(op.weight_zero_defect(), 0.5);
    }
}
