//! Small dense subspace algebra: null spaces, projectors, restricted
//! inverses, and a pivoted solve that also runs on jets.

use nalgebra::{DMatrix, DVector};

use super::jet::Real;
use crate::error::{GeomError, Result};

/// Relative singular-value threshold for null spaces and rank checks.
pub const RANK_TOL: f64 = 1e-9;
/// Largest admissible condition number for a restricted solve.
pub const MAX_CONDITION: f64 = 1e8;

/// Columns spanning a linear subspace of `R^ambient_dim`.
///
/// Columns are linearly independent but not necessarily orthonormal.
/// Rank-0 subspaces are legal values.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    basis: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let s = Self {
            ambient_dim: basis.nrows(),
            basis,
        };
        if s.rank() > 0 {
            let sv = singular_values(&s.basis);
            let max = sv.iter().copied().fold(0.0, f64::max);
            let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if !(min > RANK_TOL * max.max(f64::MIN_POSITIVE)) || s.rank() > s.ambient_dim {
                return Err(GeomError::RankDeficient);
            }
        }
        Ok(s)
    }

    /// The zero subspace of `R^n`.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// An orthonormal basis of the same span.
    pub fn orthonormal(&self) -> DMatrix<f64> {
        if self.rank() == 0 {
            return self.basis.clone();
        }
        let svd = self.basis.clone().svd(true, false);
        let u = svd.u.expect("left singular vectors requested");
        u.columns(0, self.rank()).into_owned()
    }

    /// Orthogonal projector onto the span.
    pub fn projector(&self) -> DMatrix<f64> {
        let q = self.orthonormal();
        &q * q.transpose()
    }
}

/// Singular values of `m`, empty for degenerate shapes.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Smallest of the `min(rows, cols)` singular values; `+inf` when there are none.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min)
}

/// Ratio of largest to smallest singular value.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    if sv.is_empty() {
        return 1.0;
    }
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Orthonormal basis of `{v : |Mv| <= tol·|M|}` by singular-value thresholding.
pub fn nullspace(m: &DMatrix<f64>, tol: f64) -> SubspaceBasis {
    let n = m.ncols();
    if n == 0 {
        return SubspaceBasis::zero(0);
    }
    if m.nrows() == 0 {
        return SubspaceBasis::full(n);
    }
    // Pad to at least square so that the SVD returns a full right basis.
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let norm = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = tol * norm;
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= threshold)
        .map(|(k, _)| v_t.row(k).transpose())
        .collect();
    if cols.is_empty() {
        return SubspaceBasis::zero(n);
    }
    SubspaceBasis {
        ambient_dim: n,
        basis: DMatrix::from_columns(&cols),
    }
}

/// `|P_A - P_B|_F` for the orthogonal projectors onto the two spans.
pub fn subspace_equal(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    if a.ambient_dim != b.ambient_dim {
        return Err(GeomError::DimensionMismatch {
            context: "subspace comparison",
            expected: a.ambient_dim,
            actual: b.ambient_dim,
        });
    }
    // re-validate: callers may have built bases by hand
    let a = SubspaceBasis::new(a.basis.clone())?;
    let b = SubspaceBasis::new(b.basis.clone())?;
    Ok((a.projector() - b.projector()).norm())
}

/// Inverse of `M` restricted to `span(B)`, valued in ambient coordinates:
/// `w -> B (M B)^{-1} w`.
pub fn restricted_inverse(m: &DMatrix<f64>, b: &SubspaceBasis) -> Result<DMatrix<f64>> {
    if m.ncols() != b.ambient_dim {
        return Err(GeomError::DimensionMismatch {
            context: "restricted inverse (ambient)",
            expected: m.ncols(),
            actual: b.ambient_dim,
        });
    }
    if m.nrows() != b.rank() {
        return Err(GeomError::DimensionMismatch {
            context: "restricted inverse (rank)",
            expected: m.nrows(),
            actual: b.rank(),
        });
    }
    if b.rank() == 0 {
        return Ok(DMatrix::zeros(b.ambient_dim, 0));
    }
    let restricted = m * b.basis();
    let condition = condition_number(&restricted);
    if !(condition <= MAX_CONDITION) {
        return Err(GeomError::NonTransversal { condition });
    }
    let inv = restricted
        .try_inverse()
        .ok_or(GeomError::NonTransversal { condition: f64::INFINITY })?;
    Ok(b.basis() * inv)
}

/// Solves `A X = B` by Gauss–Jordan elimination with partial pivoting on
/// the primal values. Works for `f64` and jets alike.
pub fn solve<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return None;
    }
    let mut a = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[(i, col)]
                .re()
                .abs()
                .partial_cmp(&a[(j, col)].re().abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[(pivot, col)].re().abs() < 1e-300 {
            return None;
        }
        a.swap_rows(col, pivot);
        x.swap_rows(col, pivot);
        let d = a[(col, col)];
        for c in 0..n {
            a[(col, c)] = a[(col, c)] / d;
        }
        for c in 0..x.ncols() {
            x[(col, c)] = x[(col, c)] / d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[(r, col)];
            if f.re() == 0.0 && f == T::zero() {
                continue;
            }
            for c in 0..n {
                let v = a[(col, c)];
                a[(r, c)] -= f * v;
            }
            for c in 0..x.ncols() {
                let v = x[(col, c)];
                x[(r, c)] -= f * v;
            }
        }
    }
    Some(x)
}

/// Matrix inverse through [`solve`].
pub fn inverse<T: Real>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    solve(a, &DMatrix::identity(a.nrows(), a.nrows()))
}
