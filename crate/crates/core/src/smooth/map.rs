use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::jet::Jet;
use crate::error::{GeomError, Result};

/// Step used when a map evaluated on reals is lifted to jets by central
/// differences.
pub const LIFT_STEP: f64 = 1e-5;

type JetFn = dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync;

/// A smooth map between coordinate patches `R^m -> R^n`.
///
/// The map is stored as a function on jet vectors. Evaluating with
/// zero-derivative jets gives the plain value; seeding a direction gives
/// the directional derivative exactly.
///
/// Maps whose value already requires a derivative (transport maps,
/// pullbacks of forms, curvature) are built with [`SmoothMap::from_real`]:
/// their jet payload is a central difference of the real evaluation along
/// the seeded direction.
#[derive(Clone)]
pub struct SmoothMap {
    domain_dim: usize,
    codomain_dim: usize,
    lifted: bool,
    f: Arc<JetFn>,
}

impl fmt::Debug for SmoothMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothMap")
            .field("domain_dim", &self.domain_dim)
            .field("codomain_dim", &self.codomain_dim)
            .field("lifted", &self.lifted)
            .finish()
    }
}

impl SmoothMap {
    pub fn new<F>(domain_dim: usize, codomain_dim: usize, f: F) -> Self
    where
        F: Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static,
    {
        Self {
            domain_dim,
            codomain_dim,
            lifted: false,
            f: Arc::new(f),
        }
    }

    /// Wraps a real-valued evaluation. Jet payloads are produced by a
    /// central difference of step [`LIFT_STEP`] along the seeded direction.
    pub fn from_real<F>(domain_dim: usize, codomain_dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        let lift = move |p: &[Jet]| -> Vec<Jet> {
            let base: Vec<f64> = p.iter().map(|j| j.re).collect();
            let value = f(&base);
            let scale = p.iter().fold(0.0f64, |m, j| m.max(j.eps.abs()));
            if scale == 0.0 {
                return value.into_iter().map(Jet::constant).collect();
            }
            let h = LIFT_STEP / scale;
            let shifted = |sign: f64| -> Vec<f64> {
                let q: Vec<f64> = p.iter().map(|j| j.re + sign * h * j.eps).collect();
                f(&q)
            };
            let plus = shifted(1.0);
            let minus = shifted(-1.0);
            value
                .iter()
                .zip(plus.iter().zip(&minus))
                .map(|(&v, (&a, &b))| Jet::new(v, (a - b) / (2.0 * h)))
                .collect()
        };
        Self {
            domain_dim,
            codomain_dim,
            lifted: true,
            f: Arc::new(lift),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, n, |p| p.to_vec())
    }

    /// Linear map `p -> M p`.
    pub fn linear(m: DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        Self::new(cols, rows, move |p| {
            (0..rows)
                .map(|r| {
                    (0..cols).fold(Jet::constant(0.0), |acc, c| acc + p[c] * m[(r, c)])
                })
                .collect()
        })
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    /// Whether jet payloads come from finite differences.
    pub fn is_lifted(&self) -> bool {
        self.lifted
    }

    /// Raw jet evaluation. Callers are responsible for the input length.
    pub fn eval_jets(&self, p: &[Jet]) -> Vec<Jet> {
        debug_assert_eq!(p.len(), self.domain_dim);
        let out = (self.f)(p);
        debug_assert_eq!(out.len(), self.codomain_dim);
        out
    }

    fn check_input(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.domain_dim {
            return Err(GeomError::DimensionMismatch {
                context: "smooth map input",
                expected: self.domain_dim,
                actual: p.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, p: &[f64]) -> Result<DVector<f64>> {
        self.check_input(p)?;
        let jets: Vec<Jet> = p.iter().copied().map(Jet::constant).collect();
        let out = self.eval_jets(&jets);
        if out.len() != self.codomain_dim {
            return Err(GeomError::DimensionMismatch {
                context: "smooth map output",
                expected: self.codomain_dim,
                actual: out.len(),
            });
        }
        let v = DVector::from_iterator(out.len(), out.iter().map(|j| j.re));
        if v.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::EvaluationDomain("smooth map value".into()));
        }
        Ok(v)
    }

    /// Value and derivative along `u` at `p`.
    pub fn directional(&self, p: &[f64], u: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_input(p)?;
        if u.len() != self.domain_dim {
            return Err(GeomError::DimensionMismatch {
                context: "direction",
                expected: self.domain_dim,
                actual: u.len(),
            });
        }
        let jets: Vec<Jet> = p.iter().zip(u).map(|(&a, &b)| Jet::new(a, b)).collect();
        let out = self.eval_jets(&jets);
        let val = DVector::from_iterator(out.len(), out.iter().map(|j| j.re));
        let der = DVector::from_iterator(out.len(), out.iter().map(|j| j.eps));
        if val.iter().chain(der.iter()).any(|x| !x.is_finite()) {
            return Err(GeomError::EvaluationDomain("directional derivative".into()));
        }
        Ok((val, der))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &SmoothMap) -> Result<SmoothMap> {
        if inner.codomain_dim != self.domain_dim {
            return Err(GeomError::DimensionMismatch {
                context: "composition",
                expected: self.domain_dim,
                actual: inner.codomain_dim,
            });
        }
        let outer = self.clone();
        let inner = inner.clone();
        let lifted = outer.lifted || inner.lifted;
        let mut map = SmoothMap::new(inner.domain_dim, outer.codomain_dim, move |p| {
            outer.eval_jets(&inner.eval_jets(p))
        });
        map.lifted = lifted;
        Ok(map)
    }

    /// `p -> (self(p), other(p))`.
    pub fn pair_with(&self, other: &SmoothMap) -> Result<SmoothMap> {
        if other.domain_dim != self.domain_dim {
            return Err(GeomError::DimensionMismatch {
                context: "paired maps",
                expected: self.domain_dim,
                actual: other.domain_dim,
            });
        }
        let a = self.clone();
        let b = other.clone();
        let lifted = a.lifted || b.lifted;
        let mut map = SmoothMap::new(a.domain_dim, a.codomain_dim + b.codomain_dim, move |p| {
            let mut out = a.eval_jets(p);
            out.extend(b.eval_jets(p));
            out
        });
        map.lifted = lifted;
        Ok(map)
    }

    /// `(p, q) -> (self(p), other(q))`.
    pub fn product(&self, other: &SmoothMap) -> SmoothMap {
        let a = self.clone();
        let b = other.clone();
        let split = a.domain_dim;
        let lifted = a.lifted || b.lifted;
        let mut map = SmoothMap::new(
            a.domain_dim + b.domain_dim,
            a.codomain_dim + b.codomain_dim,
            move |p| {
                let mut out = a.eval_jets(&p[..split]);
                out.extend(b.eval_jets(&p[split..]));
                out
            },
        );
        map.lifted = lifted;
        map
    }
}

/// A vector field on a coordinate patch: a smooth map `R^n -> R^n`.
#[derive(Clone, Debug)]
pub struct VectorField(SmoothMap);

impl VectorField {
    pub fn new(map: SmoothMap) -> Result<Self> {
        if map.domain_dim() != map.codomain_dim() {
            return Err(GeomError::DimensionMismatch {
                context: "vector field",
                expected: map.domain_dim(),
                actual: map.codomain_dim(),
            });
        }
        Ok(Self(map))
    }

    pub fn dim(&self) -> usize {
        self.0.domain_dim()
    }

    pub fn map(&self) -> &SmoothMap {
        &self.0
    }
}

/// Jacobian by seeding each coordinate direction with a unit jet.
pub fn jacobian(f: &SmoothMap, p: &[f64]) -> Result<DMatrix<f64>> {
    f.check_input(p)?;
    let (m, n) = (f.codomain_dim(), f.domain_dim());
    let mut jac = DMatrix::zeros(m, n);
    let mut seed: Vec<Jet> = p.iter().copied().map(Jet::constant).collect();
    for col in 0..n {
        seed[col].eps = 1.0;
        let out = f.eval_jets(&seed);
        seed[col].eps = 0.0;
        for (row, j) in out.iter().enumerate() {
            if !j.eps.is_finite() || !j.re.is_finite() {
                return Err(GeomError::EvaluationDomain("jacobian".into()));
            }
            jac[(row, col)] = j.eps;
        }
    }
    Ok(jac)
}

/// Central-difference Jacobian, used as an independent check on [`jacobian`].
pub fn jacobian_fd(f: &SmoothMap, p: &[f64], h: f64) -> Result<DMatrix<f64>> {
    f.check_input(p)?;
    if !(h > 0.0) {
        return Err(GeomError::Precondition("finite-difference step must be positive".into()));
    }
    let (m, n) = (f.codomain_dim(), f.domain_dim());
    let mut jac = DMatrix::zeros(m, n);
    let mut q = p.to_vec();
    for col in 0..n {
        q[col] = p[col] + h;
        let plus = f.eval(&q)?;
        q[col] = p[col] - h;
        let minus = f.eval(&q)?;
        q[col] = p[col];
        jac.set_column(col, &((plus - minus) / (2.0 * h)));
    }
    Ok(jac)
}

/// Lie bracket `[u, v](p) = J_v u - J_u v`.
pub fn lie_bracket(u: &VectorField, v: &VectorField, p: &[f64]) -> Result<DVector<f64>> {
    if u.dim() != v.dim() {
        return Err(GeomError::DimensionMismatch {
            context: "lie bracket",
            expected: u.dim(),
            actual: v.dim(),
        });
    }
    let uval = u.map().eval(p)?;
    let vval = v.map().eval(p)?;
    let (_, dv_u) = v.map().directional(p, uval.as_slice())?;
    let (_, du_v) = u.map().directional(p, vval.as_slice())?;
    Ok(dv_u - du_v)
}
