//! Differential forms in coordinates, stored on sorted index tuples.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::connection::{vertical_space, GroupoidConnection};
use crate::error::{GeomError, Result};
use crate::residual::Residuals;
use crate::sampling;
use crate::smooth::{jacobian, Jet, SmoothMap};

/// A `degree`-form on `R^ambient_dim` with values in `R^width`.
///
/// The coefficient map returns, for every sorted tuple `i_1 < ... < i_j` in
/// lexicographic order, `width` consecutive values.
#[derive(Clone, Debug)]
pub struct DifferentialForm {
    ambient_dim: usize,
    degree: usize,
    width: usize,
    coeff: SmoothMap,
}

/// Forms with values in a Lie algebra, in coordinates of a fixed basis.
pub type VectorValuedForm = DifferentialForm;

/// Sorted index tuples of length `degree` in lexicographic order.
pub fn index_tuples(ambient_dim: usize, degree: usize) -> Vec<Vec<usize>> {
    (0..ambient_dim).combinations(degree).collect()
}

fn tuple_position(tuples: &[Vec<usize>], t: &[usize]) -> usize {
    tuples
        .iter()
        .position(|u| u.as_slice() == t)
        .expect("tuple drawn from the same index set")
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Determinant of the `rows × cols` submatrix.
fn minor(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])]).determinant()
}

impl DifferentialForm {
    pub fn new(ambient_dim: usize, degree: usize, width: usize, coeff: SmoothMap) -> Result<Self> {
        if degree > ambient_dim {
            return Err(GeomError::Precondition(format!(
                "degree {degree} exceeds ambient dimension {ambient_dim}"
            )));
        }
        let expected = binomial(ambient_dim, degree) * width;
        if coeff.domain_dim() != ambient_dim || coeff.codomain_dim() != expected {
            return Err(GeomError::DimensionMismatch {
                context: "form coefficients",
                expected,
                actual: coeff.codomain_dim(),
            });
        }
        Ok(Self {
            ambient_dim,
            degree,
            width,
            coeff,
        })
    }

    /// Real-valued form from a jet coefficient function.
    pub fn scalar<F>(ambient_dim: usize, degree: usize, f: F) -> Result<Self>
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        let len = binomial(ambient_dim, degree);
        Self::new(ambient_dim, degree, 1, SmoothMap::new(ambient_dim, len, f))
    }

    pub fn zero(ambient_dim: usize, degree: usize, width: usize) -> Self {
        let len = binomial(ambient_dim, degree) * width;
        Self::new(
            ambient_dim,
            degree,
            width,
            SmoothMap::new(ambient_dim, len, move |_| vec![Jet::constant(0.0); len]),
        )
        .expect("zero form is well formed")
    }

    /// The coordinate form `dx_i`.
    pub fn coordinate(ambient_dim: usize, i: usize) -> Self {
        Self::scalar(ambient_dim, 1, move |_| {
            (0..ambient_dim)
                .map(|k| Jet::constant(if k == i { 1.0 } else { 0.0 }))
                .collect()
        })
        .expect("coordinate form is well formed")
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn coeff_map(&self) -> &SmoothMap {
        &self.coeff
    }

    pub fn tuples(&self) -> Vec<Vec<usize>> {
        index_tuples(self.ambient_dim, self.degree)
    }

    /// Coefficients at `p`: one row per sorted tuple, one column per value.
    pub fn coefficients(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let v = self.coeff.eval(p)?;
        Ok(DMatrix::from_row_slice(
            binomial(self.ambient_dim, self.degree),
            self.width,
            v.as_slice(),
        ))
    }

    /// `omega_p(v_1, ..., v_j)`.
    pub fn eval(&self, p: &[f64], vectors: &[DVector<f64>]) -> Result<DVector<f64>> {
        if vectors.len() != self.degree {
            return Err(GeomError::DimensionMismatch {
                context: "number of form arguments",
                expected: self.degree,
                actual: vectors.len(),
            });
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.ambient_dim) {
            return Err(GeomError::DimensionMismatch {
                context: "form argument",
                expected: self.ambient_dim,
                actual: v.len(),
            });
        }
        let c = self.coefficients(p)?;
        let args = DMatrix::from_fn(self.ambient_dim, self.degree, |r, k| vectors[k][r]);
        let cols: Vec<usize> = (0..self.degree).collect();
        let mut out = DVector::zeros(self.width);
        for (row, t) in self.tuples().iter().enumerate() {
            let det = minor(&args, t, &cols);
            for w in 0..self.width {
                out[w] += c[(row, w)] * det;
            }
        }
        Ok(out)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if (self.ambient_dim, self.degree, self.width)
            != (other.ambient_dim, other.degree, other.width)
        {
            return Err(GeomError::Precondition(
                "forms of different shape cannot be combined".into(),
            ));
        }
        Ok(())
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.same_shape(other)?;
        let (f, g) = (self.coeff.clone(), other.coeff.clone());
        let len = f.codomain_dim();
        let coeff = SmoothMap::new(self.ambient_dim, len, move |p| {
            f.eval_jets(p)
                .into_iter()
                .zip(g.eval_jets(p))
                .map(|(x, y)| x * a + y * b)
                .collect()
        });
        Self::new(self.ambient_dim, self.degree, self.width, coeff)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.linear_combination(1.0, other, -1.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        let f = self.coeff.clone();
        let coeff = SmoothMap::new(self.ambient_dim, f.codomain_dim(), move |p| {
            f.eval_jets(p).into_iter().map(|x| x * a).collect()
        });
        Self { coeff, ..self.clone() }
    }

    /// Component `w` as a real-valued form.
    pub fn component(&self, w: usize) -> Self {
        let (f, width) = (self.coeff.clone(), self.width);
        let len = binomial(self.ambient_dim, self.degree);
        let coeff = SmoothMap::new(self.ambient_dim, len, move |p| {
            f.eval_jets(p).into_iter().skip(w).step_by(width).collect()
        });
        Self {
            width: 1,
            coeff,
            ..self.clone()
        }
    }
}

/// `f*omega`. Degree-0 forms compose exactly; higher degrees contract with
/// minors of `df`, so their jets are lifted.
pub fn pullback(f: &SmoothMap, omega: &DifferentialForm) -> Result<DifferentialForm> {
    if f.codomain_dim() != omega.ambient_dim {
        return Err(GeomError::DimensionMismatch {
            context: "pullback target",
            expected: omega.ambient_dim,
            actual: f.codomain_dim(),
        });
    }
    let n = f.domain_dim();
    let (j, width) = (omega.degree, omega.width);
    if j > n {
        return Err(GeomError::Precondition(format!(
            "cannot pull a {j}-form back to a {n}-dimensional space"
        )));
    }
    if j == 0 {
        return DifferentialForm::new(n, 0, width, omega.coeff.compose(f)?);
    }
    let (f, omega) = (f.clone(), omega.clone());
    let src_tuples = index_tuples(n, j);
    let dst_tuples = omega.tuples();
    let len = src_tuples.len() * width;
    let coeff = SmoothMap::from_real(n, len, move |p| {
        let run = || -> Result<Vec<f64>> {
            let df = jacobian(&f, p)?;
            let fp = f.eval(p)?;
            let c = omega.coefficients(fp.as_slice())?;
            let mut out = vec![0.0; len];
            for (a, jt) in src_tuples.iter().enumerate() {
                for (b, it) in dst_tuples.iter().enumerate() {
                    let det = minor(&df, it, jt);
                    if det != 0.0 {
                        for w in 0..width {
                            out[a * width + w] += c[(b, w)] * det;
                        }
                    }
                }
            }
            Ok(out)
        };
        run().unwrap_or_else(|_| vec![f64::NAN; len])
    });
    DifferentialForm::new(n, j, width, coeff)
}

/// `d omega` by the coordinate formula on the Jacobian of the coefficients.
pub fn exterior_derivative(omega: &DifferentialForm) -> Result<DifferentialForm> {
    let (n, j, width) = (omega.ambient_dim, omega.degree, omega.width);
    if j >= n {
        return Err(GeomError::Precondition(format!(
            "exterior derivative of a top-degree {j}-form on R^{n}"
        )));
    }
    let src = omega.tuples();
    let dst = index_tuples(n, j + 1);
    let len = dst.len() * width;
    let coeff_map = omega.coeff.clone();
    let coeff = SmoothMap::from_real(n, len, move |p| {
        let jac = match jacobian(&coeff_map, p) {
            Ok(m) => m,
            Err(_) => return vec![f64::NAN; len],
        };
        let mut out = vec![0.0; len];
        for (a, t) in dst.iter().enumerate() {
            for k in 0..t.len() {
                let mut rest = t.clone();
                let i_k = rest.remove(k);
                let b = tuple_position(&src, &rest);
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                for w in 0..width {
                    out[a * width + w] += sign * jac[(b * width + w, i_k)];
                }
            }
        }
        out
    });
    DifferentialForm::new(n, j + 1, width, coeff)
}

/// `alpha ∧ beta`. At least one factor must be real-valued.
pub fn wedge(alpha: &DifferentialForm, beta: &DifferentialForm) -> Result<DifferentialForm> {
    if alpha.ambient_dim != beta.ambient_dim {
        return Err(GeomError::DimensionMismatch {
            context: "wedge factors",
            expected: alpha.ambient_dim,
            actual: beta.ambient_dim,
        });
    }
    if alpha.width != 1 && beta.width != 1 {
        return Err(GeomError::Precondition(
            "wedge needs a real-valued factor".into(),
        ));
    }
    let n = alpha.ambient_dim;
    let (p, q) = (alpha.degree, beta.degree);
    if p + q > n {
        return Err(GeomError::Precondition(format!(
            "wedge degree {} exceeds ambient dimension {n}",
            p + q
        )));
    }
    let width = alpha.width.max(beta.width);
    let (a_tuples, b_tuples) = (alpha.tuples(), beta.tuples());
    // For each output tuple: (sign, index into alpha, index into beta).
    let plan: Vec<Vec<(f64, usize, usize)>> = index_tuples(n, p + q)
        .into_iter()
        .map(|k| {
            (0..p + q)
                .combinations(p)
                .map(|pos| {
                    let i: Vec<usize> = pos.iter().map(|&x| k[x]).collect();
                    let j: Vec<usize> = (0..p + q)
                        .filter(|x| !pos.contains(x))
                        .map(|x| k[x])
                        .collect();
                    let inversions: usize = pos.iter().enumerate().map(|(a, &x)| x - a).sum();
                    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                    (sign, tuple_position(&a_tuples, &i), tuple_position(&b_tuples, &j))
                })
                .collect()
        })
        .collect();
    let (fa, fb) = (alpha.coeff.clone(), beta.coeff.clone());
    let (wa, wb) = (alpha.width, beta.width);
    let len = plan.len() * width;
    let coeff = SmoothMap::new(n, len, move |x| {
        let (ca, cb) = (fa.eval_jets(x), fb.eval_jets(x));
        let mut out = vec![Jet::constant(0.0); len];
        for (k, terms) in plan.iter().enumerate() {
            for &(sign, ia, ib) in terms {
                for w in 0..width {
                    let a = ca[ia * wa + if wa == 1 { 0 } else { w }];
                    let b = cb[ib * wb + if wb == 1 { 0 } else { w }];
                    out[k * width + w] += a * b * sign;
                }
            }
        }
        out
    });
    DifferentialForm::new(n, p + q, width, coeff)
}

/// Projection of `T_y X1` onto `H_y` along `ker ds_y`, from the block
/// solve `[H | K] c = w`.
pub fn horizontal_projector(c: &GroupoidConnection, y: &[f64]) -> Result<DMatrix<f64>> {
    let h = c.frame_at(y)?;
    let k = vertical_space(&c.base, y)?;
    let n = c.base.dim_arr;
    let mut block = DMatrix::zeros(n, n);
    block.columns_mut(0, h.ncols()).copy_from(&h);
    block
        .columns_mut(h.ncols(), k.rank())
        .copy_from(k.basis());
    let inv = block.try_inverse().ok_or(GeomError::NonTransversal {
        condition: f64::INFINITY,
    })?;
    Ok(&h * inv.rows(0, h.ncols()))
}

/// `H(omega)_y(v_1..v_j) = omega_y(P v_1, .., P v_j)`.
pub fn h_projection(c: &GroupoidConnection, omega: &DifferentialForm) -> Result<DifferentialForm> {
    let n = c.base.dim_arr;
    if omega.ambient_dim != n {
        return Err(GeomError::DimensionMismatch {
            context: "form on the arrow space",
            expected: n,
            actual: omega.ambient_dim,
        });
    }
    let (j, width) = (omega.degree, omega.width);
    if j == 0 {
        return Ok(omega.clone());
    }
    let tuples = omega.tuples();
    let len = tuples.len() * width;
    let (c, omega) = (c.clone(), omega.clone());
    let coeff = SmoothMap::from_real(n, len, move |y| {
        let run = || -> Result<Vec<f64>> {
            let p = horizontal_projector(&c, y)?;
            let co = omega.coefficients(y)?;
            let mut out = vec![0.0; len];
            for (a, jt) in tuples.iter().enumerate() {
                for (b, it) in tuples.iter().enumerate() {
                    let det = minor(&p, it, jt);
                    for w in 0..width {
                        out[a * width + w] += co[(b, w)] * det;
                    }
                }
            }
            Ok(out)
        };
        run().unwrap_or_else(|_| vec![f64::NAN; len])
    });
    DifferentialForm::new(n, j, width, coeff)
}

/// `max |H(s*omega) - H(t*omega)|` over sampled arrows, on every coordinate
/// tuple and on three random tuples per arrow.
pub fn check_groupoid_form(
    c: &GroupoidConnection,
    omega: &DifferentialForm,
    n_samples: usize,
    seed: u64,
) -> Result<Residuals> {
    let g = &c.base;
    if omega.ambient_dim != g.dim_obj {
        return Err(GeomError::DimensionMismatch {
            context: "form on the object space",
            expected: g.dim_obj,
            actual: omega.ambient_dim,
        });
    }
    let hs = h_projection(c, &pullback(&g.s, omega)?)?;
    let ht = h_projection(c, &pullback(&g.t, omega)?)?;
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    r.record("groupoid_form", 0.0);
    for _ in 0..n_samples {
        let y = g.sample_arrow(&mut rng);
        let diff = hs.coefficients(y.as_slice())? - ht.coefficients(y.as_slice())?;
        r.record("groupoid_form", diff.amax());
        for _ in 0..3 {
            let args: Vec<DVector<f64>> = (0..omega.degree)
                .map(|_| sampling::unit_vector(&mut rng, g.dim_arr))
                .collect();
            let d = hs.eval(y.as_slice(), &args)? - ht.eval(y.as_slice(), &args)?;
            r.record("groupoid_form", d.amax());
        }
    }
    Ok(r)
}

/// [`check_groupoid_form`] applied to `d omega`.
pub fn check_dclosure(
    c: &GroupoidConnection,
    omega: &DifferentialForm,
    n_samples: usize,
    seed: u64,
) -> Result<Residuals> {
    if omega.degree >= omega.ambient_dim {
        let mut r = Residuals::new();
        r.record("groupoid_form", 0.0);
        return Ok(r);
    }
    check_groupoid_form(c, &exterior_derivative(omega)?, n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::Real;

    fn at(form: &DifferentialForm, p: &[f64]) -> Vec<f64> {
        form.coefficients(p).unwrap().as_slice().to_vec()
    }

    #[test]
    fn x_dy_has_unit_derivative() {
        let w = DifferentialForm::scalar(2, 1, |p| vec![Jet::constant(0.0), p[0]]).unwrap();
        let dw = exterior_derivative(&w).unwrap();
        assert!((at(&dw, &[0.3, -0.7])[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn d_squared_vanishes() {
        let w = DifferentialForm::scalar(2, 1, |p| vec![p[0].sin() * p[1], p[0] * p[0]]).unwrap();
        let w3 = DifferentialForm::scalar(3, 1, |p| vec![p[1] * p[2].cos(), p[0].exp() * p[2], p[0] * p[1] * p[1]]).unwrap();
        let dd = exterior_derivative(&exterior_derivative(&w3).unwrap()).unwrap();
        assert!(at(&dd, &[0.2, 0.4, -0.3])[0].abs() < 1e-7);
        assert!(matches!(
            exterior_derivative(&exterior_derivative(&w).unwrap()),
            Err(GeomError::Precondition(_))
        ));
    }

    #[test]
    fn constant_forms_are_closed() {
        let w = DifferentialForm::coordinate(3, 1);
        assert!(at(&exterior_derivative(&w).unwrap(), &[1.0, 2.0, 3.0]).iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn wedge_signs() {
        let (dx, dy) = (DifferentialForm::coordinate(2, 0), DifferentialForm::coordinate(2, 1));
        assert_eq!(at(&wedge(&dx, &dy).unwrap(), &[0.0, 0.0]), [1.0]);
        assert_eq!(at(&wedge(&dy, &dx).unwrap(), &[0.0, 0.0]), [-1.0]);
        assert_eq!(at(&wedge(&dx, &dx).unwrap(), &[0.0, 0.0]), [0.0]);
        let xdy = DifferentialForm::scalar(2, 1, |p| vec![Jet::constant(0.0), p[0]]).unwrap();
        let ydx = DifferentialForm::scalar(2, 1, |p| vec![p[1], Jet::constant(0.0)]).unwrap();
        assert_eq!(at(&wedge(&xdy, &ydx).unwrap(), &[2.0, 3.0]), [-6.0]);
    }

    #[test]
    fn pullback_along_linear_source() {
        let db = DifferentialForm::coordinate(1, 0);
        let s = SmoothMap::new(2, 1, |p| vec![p[1]]);
        assert_eq!(at(&pullback(&s, &db).unwrap(), &[0.5, 0.5]), [0.0, 1.0]);
        let id = pullback(&SmoothMap::identity(2), &DifferentialForm::coordinate(2, 1)).unwrap();
        assert_eq!(at(&id, &[0.1, 0.2]), [0.0, 1.0]);
    }

    #[test]
    fn pullback_commutes_with_d() {
        let w = DifferentialForm::scalar(2, 1, |p| vec![Jet::constant(0.0), p[0]]).unwrap();
        let f = SmoothMap::new(2, 2, |p| vec![p[0] * p[0], p[1]]);
        let a = exterior_derivative(&pullback(&f, &w).unwrap()).unwrap();
        let b = pullback(&f, &exterior_derivative(&w).unwrap()).unwrap();
        for p in [[0.3, 0.1], [-1.2, 0.5], [2.0, -0.4]] {
            assert!((at(&a, &p)[0] - at(&b, &p)[0]).abs() < 1e-8);
            assert!((at(&b, &p)[0] - 2.0 * p[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn evaluation_is_alternating() {
        let w = wedge(&DifferentialForm::coordinate(3, 0), &DifferentialForm::coordinate(3, 2)).unwrap();
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let v = DVector::from_vec(vec![-1.0, 0.5, 2.0]);
        let a = w.eval(&[0.0; 3], &[u.clone(), v.clone()]).unwrap()[0];
        let b = w.eval(&[0.0; 3], &[v, u]).unwrap()[0];
        assert_eq!(a, 1.0 * 2.0 - 3.0 * -1.0);
        assert_eq!(a, -b);
    }
}
