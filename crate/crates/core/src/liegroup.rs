//! Matrix Lie groups given by a basis of their Lie algebra.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::smooth::{Real, RANK_TOL};

/// Largest admissible distance of a matrix from the algebra.
pub const CLOSURE_TOL: f64 = 1e-9;

/// A connected matrix group with a fixed algebra basis `xi_1..xi_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixLieGroup {
    pub name: String,
    size: usize,
    basis: Vec<DMatrix<f64>>,
    gram_inv: DMatrix<f64>,
}

/// `exp` of a square matrix by scaling and squaring of a Taylor polynomial.
pub fn expm<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let norm = (0..n)
        .map(|r| (0..n).map(|c| a[(r, c)].re().abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scale = T::from_f64(0.5f64.powi(squarings));
    let a = a.map(|x| x * scale);
    let mut term = DMatrix::<T>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=20 {
        term = (&term * &a).map(|x| x / T::from_f64(k as f64));
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

impl MatrixLieGroup {
    /// Validates independence and closure under the commutator.
    pub fn new(name: &str, size: usize, basis: Vec<DMatrix<f64>>) -> Result<Self> {
        if let Some(b) = basis.iter().find(|b| b.shape() != (size, size)) {
            return Err(GeomError::DimensionMismatch {
                context: "algebra basis matrix",
                expected: size,
                actual: b.nrows(),
            });
        }
        let d = basis.len();
        let gram = DMatrix::from_fn(d, d, |i, j| frobenius(&basis[i], &basis[j]));
        let sv = crate::smooth::singular_values(&gram);
        let max = sv.iter().copied().fold(0.0, f64::max);
        if sv.iter().any(|&s| s <= RANK_TOL * max) {
            return Err(GeomError::RankDeficient);
        }
        let gram_inv = gram.try_inverse().ok_or(GeomError::RankDeficient)?;
        let g = Self {
            name: name.to_string(),
            size,
            basis,
            gram_inv,
        };
        for i in 0..d {
            for j in 0..d {
                let c = &g.basis[i] * &g.basis[j] - &g.basis[j] * &g.basis[i];
                g.coords_of(&c)?;
            }
        }
        Ok(g)
    }

    /// `SO(2)` with generator `J = [[0,-1],[1,0]]`.
    pub fn so2() -> Self {
        Self::new("SO(2)", 2, vec![DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])])
            .expect("so(2) basis is valid")
    }

    /// `SO(3)` with the standard generators `(L_i)_{jk} = -eps_{ijk}`,
    /// so that `[L_1, L_2] = L_3`.
    pub fn so3() -> Self {
        let l = |i: usize| {
            DMatrix::from_fn(3, 3, |j, k| {
                let eps = match (i, j, k) {
                    (a, b, c) if (a + 1) % 3 == b && (b + 1) % 3 == c => 1.0,
                    (a, b, c) if (a + 2) % 3 == b && (b + 2) % 3 == c => -1.0,
                    _ => 0.0,
                };
                -eps
            })
        };
        Self::new("SO(3)", 3, vec![l(0), l(1), l(2)]).expect("so(3) basis is valid")
    }

    /// Positive reals under multiplication, as `1×1` matrices.
    pub fn scaling() -> Self {
        Self::new("R+", 1, vec![DMatrix::identity(1, 1)]).expect("scaling basis is valid")
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix_size(&self) -> usize {
        self.size
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    /// `sum_i xi_i · basis_i`.
    pub fn matrix_of<T: Real>(&self, xi: &[T]) -> DMatrix<T> {
        let n = self.size;
        let mut m = DMatrix::<T>::zeros(n, n);
        for (c, b) in xi.iter().zip(&self.basis) {
            for r in 0..n {
                for k in 0..n {
                    if b[(r, k)] != 0.0 {
                        m[(r, k)] += *c * T::from_f64(b[(r, k)]);
                    }
                }
            }
        }
        m
    }

    /// Basis coordinates of an algebra element, generic over jets.
    pub fn coords_of_generic<T: Real>(&self, m: &DMatrix<T>) -> DVector<T> {
        let d = self.dim();
        let inner: Vec<T> = self
            .basis
            .iter()
            .map(|b| {
                let mut acc = T::zero();
                for r in 0..self.size {
                    for k in 0..self.size {
                        if b[(r, k)] != 0.0 {
                            acc += m[(r, k)] * T::from_f64(b[(r, k)]);
                        }
                    }
                }
                acc
            })
            .collect();
        DVector::from_fn(d, |i, _| {
            (0..d).fold(T::zero(), |acc, j| acc + inner[j] * T::from_f64(self.gram_inv[(i, j)]))
        })
    }

    /// Basis coordinates of `m`, failing if `m` leaves the algebra.
    pub fn coords_of(&self, m: &DMatrix<f64>) -> Result<DVector<f64>> {
        let xi = self.coords_of_generic(m);
        let residual = (self.matrix_of(xi.as_slice()) - m).norm();
        if !(residual <= CLOSURE_TOL * (1.0 + m.norm())) {
            return Err(GeomError::AlgebraClosure { residual });
        }
        Ok(xi)
    }

    pub fn exp(&self, xi: &[f64]) -> DMatrix<f64> {
        expm(&self.matrix_of(xi))
    }

    /// `Ad_g xi = g xi g^{-1}` in coordinates.
    pub fn adjoint(&self, g: &DMatrix<f64>, xi: &[f64]) -> Result<DVector<f64>> {
        let g_inv = g.clone().try_inverse().ok_or_else(|| {
            GeomError::Precondition("group element is not invertible".into())
        })?;
        self.coords_of(&(g * self.matrix_of(xi) * g_inv))
    }

    /// Matrix of `Ad_g` in the algebra basis.
    pub fn adjoint_matrix(&self, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            out.set_column(j, &self.adjoint(g, &e)?);
        }
        Ok(out)
    }

    /// `[xi, eta]` in coordinates.
    pub fn bracket(&self, xi: &[f64], eta: &[f64]) -> DVector<f64> {
        let (a, b) = (self.matrix_of(xi), self.matrix_of(eta));
        self.coords_of_generic(&(&a * &b - &b * &a))
    }

    /// Matrix of `ad_xi` in the algebra basis.
    pub fn ad_matrix(&self, xi: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            out.set_column(j, &self.bracket(xi, &e));
        }
        out
    }

    /// `c[k][(i, j)]` with `[xi_i, xi_j] = sum_k c^k_ij xi_k`.
    pub fn structure_constants(&self) -> Vec<DMatrix<f64>> {
        let d = self.dim();
        let mut c = vec![DMatrix::zeros(d, d); d];
        for i in 0..d {
            for j in 0..d {
                let mut ei = vec![0.0; d];
                let mut ej = vec![0.0; d];
                ei[i] = 1.0;
                ej[j] = 1.0;
                let b = self.bracket(&ei, &ej);
                for (k, ck) in c.iter_mut().enumerate() {
                    ck[(i, j)] = b[k];
                }
            }
        }
        c
    }
}

/// An Ad-invariant symmetric multilinear form on the algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum InvariantPolynomial {
    /// `(1/k!) sum_sigma tr(A_sigma(1) ... A_sigma(k))`.
    Trace { degree: usize },
    /// The linear functional `A -> <B, A>_F / <B, B>_F`; Ad-invariant when
    /// `B` is central, as for `so(2)`.
    Pairing { element: Vec<f64> },
}

impl InvariantPolynomial {
    pub fn trace(degree: usize) -> Self {
        Self::Trace { degree }
    }

    pub fn degree(&self) -> usize {
        match self {
            Self::Trace { degree } => *degree,
            Self::Pairing { .. } => 1,
        }
    }

    /// Value on matrices in the algebra.
    pub fn eval_matrices(&self, g: &MatrixLieGroup, args: &[DMatrix<f64>]) -> Result<f64> {
        if args.len() != self.degree() {
            return Err(GeomError::DimensionMismatch {
                context: "invariant polynomial arguments",
                expected: self.degree(),
                actual: args.len(),
            });
        }
        match self {
            Self::Trace { degree } => {
                let k = *degree;
                if k == 0 {
                    return Ok(1.0);
                }
                let n = g.matrix_size();
                let mut total = 0.0;
                let mut count = 0usize;
                for perm in (0..k).permutations(k) {
                    let prod = perm
                        .iter()
                        .fold(DMatrix::identity(n, n), |acc, &i| acc * &args[i]);
                    total += prod.trace();
                    count += 1;
                }
                Ok(total / count as f64)
            }
            Self::Pairing { element } => {
                let b = g.matrix_of(element);
                Ok(frobenius(&b, &args[0]) / frobenius(&b, &b))
            }
        }
    }

    /// Value on algebra coordinates.
    pub fn eval(&self, g: &MatrixLieGroup, args: &[DVector<f64>]) -> Result<f64> {
        let mats: Vec<DMatrix<f64>> = args.iter().map(|a| g.matrix_of(a.as_slice())).collect();
        self.eval_matrices(g, &mats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::Jet;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn exp_of_zero_and_rotation() {
        let g = MatrixLieGroup::so2();
        assert_eq!(g.exp(&[0.0]), DMatrix::identity(2, 2));
        let r = g.exp(&[FRAC_PI_2]);
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((r - expected).amax() < 1e-14);
    }

    #[test]
    fn exp_inverse_pairs() {
        let g = MatrixLieGroup::so3();
        let xi = [0.7, -2.1, 1.3];
        let back = [-0.7, 2.1, -1.3];
        assert!((g.exp(&xi) * g.exp(&back) - DMatrix::identity(3, 3)).amax() < 1e-11);
    }

    #[test]
    fn so3_brackets_and_adjoint() {
        let g = MatrixLieGroup::so3();
        let b = g.bracket(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!((b - DVector::from_vec(vec![0.0, 0.0, 1.0])).amax() < 1e-15);
        let h = g.exp(&[0.0, 0.0, FRAC_PI_2]);
        let ad = g.adjoint(&h, &[1.0, 0.0, 0.0]).unwrap();
        assert!((ad - DVector::from_vec(vec![0.0, 1.0, 0.0])).amax() < 1e-14);
        assert_eq!(g.bracket(&[0.3, 0.1, 2.0], &[0.3, 0.1, 2.0]).amax(), 0.0);
    }

    #[test]
    fn abelian_adjoint_is_trivial() {
        let g = MatrixLieGroup::so2();
        let h = g.exp(&[1.234]);
        assert!((g.adjoint(&h, &[0.5]).unwrap()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn off_algebra_matrix_rejected() {
        let g = MatrixLieGroup::so2();
        assert!(matches!(
            g.coords_of(&DMatrix::identity(2, 2)),
            Err(GeomError::AlgebraClosure { .. })
        ));
    }

    #[test]
    fn non_closed_basis_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            MatrixLieGroup::new("broken", 2, vec![a, b]),
            Err(GeomError::AlgebraClosure { .. })
        ));
    }

    #[test]
    fn trace_polynomials_on_so2() {
        let g = MatrixLieGroup::so2();
        let j = DVector::from_vec(vec![1.0]);
        assert_eq!(InvariantPolynomial::trace(1).eval(&g, &[j.clone()]).unwrap(), 0.0);
        assert_eq!(InvariantPolynomial::trace(2).eval(&g, &[j.clone(), j.clone()]).unwrap(), -2.0);
        let pairing = InvariantPolynomial::Pairing { element: vec![1.0] };
        assert_eq!(pairing.eval(&g, &[j]).unwrap(), 1.0);
    }

    #[test]
    fn expm_differentiates_on_jets() {
        // d/dt exp(tJ) at t = 0.3 is J exp(0.3 J)
        let g = MatrixLieGroup::so2();
        let m = g.matrix_of(&[Jet::variable(0.3)]);
        let e = expm(&m);
        let expected = g.matrix_of(&[1.0]) * g.exp(&[0.3]);
        for r in 0..2 {
            for c in 0..2 {
                assert!((e[(r, c)].eps - expected[(r, c)]).abs() < 1e-13);
            }
        }
    }
}
