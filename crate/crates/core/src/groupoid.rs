//! Lie groupoids `[X1 => X0]` in a single coordinate patch.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::residual::{dist, Residuals};
use crate::sampling::{self, Rng};
use crate::smooth::{jacobian, min_singular_value, SmoothMap};

/// Tolerance for the composability precondition `t(y) = s(z)`.
pub const COMPOSABLE_TOL: f64 = 1e-8;

type ObjectFn = dyn Fn(&mut Rng) -> DVector<f64> + Send + Sync;
type ArrowFn = dyn Fn(&[f64], &mut Rng) -> DVector<f64> + Send + Sync;

/// Constructive sampler for objects and arrows.
///
/// `arrow_from(x)` must return an arrow with source `x`; composable pairs
/// and triples are built from it, so no fibre equation is ever solved.
#[derive(Clone)]
pub struct Sampler {
    object: Arc<ObjectFn>,
    arrow_from: Arc<ArrowFn>,
}

impl Sampler {
    pub fn new<O, A>(object: O, arrow_from: A) -> Self
    where
        O: Fn(&mut Rng) -> DVector<f64> + Send + Sync + 'static,
        A: Fn(&[f64], &mut Rng) -> DVector<f64> + Send + Sync + 'static,
    {
        Self {
            object: Arc::new(object),
            arrow_from: Arc::new(arrow_from),
        }
    }

    pub fn object(&self, rng: &mut Rng) -> DVector<f64> {
        (self.object)(rng)
    }

    pub fn arrow_from(&self, x: &[f64], rng: &mut Rng) -> DVector<f64> {
        (self.arrow_from)(x, rng)
    }
}

/// Structure maps of a Lie groupoid together with a sampler.
///
/// Multiplication takes the flat pair `(z, y)` and returns `z∘y`; it is
/// defined when `t(y) = s(z)`.
#[derive(Clone)]
pub struct LieGroupoid {
    pub dim_obj: usize,
    pub dim_arr: usize,
    pub s: SmoothMap,
    pub t: SmoothMap,
    pub m: SmoothMap,
    pub e: SmoothMap,
    pub i: SmoothMap,
    pub sampler: Sampler,
}

impl fmt::Debug for LieGroupoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieGroupoid")
            .field("dim_obj", &self.dim_obj)
            .field("dim_arr", &self.dim_arr)
            .finish_non_exhaustive()
    }
}

fn expect_dims(map: &SmoothMap, name: &'static str, dom: usize, cod: usize) -> Result<()> {
    if map.domain_dim() != dom {
        return Err(GeomError::DimensionMismatch {
            context: name,
            expected: dom,
            actual: map.domain_dim(),
        });
    }
    if map.codomain_dim() != cod {
        return Err(GeomError::DimensionMismatch {
            context: name,
            expected: cod,
            actual: map.codomain_dim(),
        });
    }
    Ok(())
}

impl LieGroupoid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dim_obj: usize,
        dim_arr: usize,
        s: SmoothMap,
        t: SmoothMap,
        m: SmoothMap,
        e: SmoothMap,
        i: SmoothMap,
        sampler: Sampler,
    ) -> Result<Self> {
        expect_dims(&s, "source map", dim_arr, dim_obj)?;
        expect_dims(&t, "target map", dim_arr, dim_obj)?;
        expect_dims(&m, "multiplication", 2 * dim_arr, dim_arr)?;
        expect_dims(&e, "unit map", dim_obj, dim_arr)?;
        expect_dims(&i, "inverse map", dim_arr, dim_arr)?;
        Ok(Self {
            dim_obj,
            dim_arr,
            s,
            t,
            m,
            e,
            i,
            sampler,
        })
    }

    /// The unit groupoid `[R^n => R^n]`: every structure map is the identity.
    pub fn unit(n: usize, lo: f64, hi: f64) -> Self {
        let id = SmoothMap::identity(n);
        let m = SmoothMap::new(2 * n, n, move |p| p[n..].to_vec());
        Self {
            dim_obj: n,
            dim_arr: n,
            s: id.clone(),
            t: id.clone(),
            m,
            e: id.clone(),
            i: id,
            sampler: Sampler::new(
                move |rng| sampling::uniform_box(rng, n, lo, hi),
                |x, _| DVector::from_column_slice(x),
            ),
        }
    }

    pub fn sample_object(&self, rng: &mut Rng) -> DVector<f64> {
        self.sampler.object(rng)
    }

    pub fn sample_arrow(&self, rng: &mut Rng) -> DVector<f64> {
        let x = self.sample_object(rng);
        self.sampler.arrow_from(x.as_slice(), rng)
    }

    /// A composable pair `(z, y)` with `t(y) = s(z)`.
    pub fn sample_pair(&self, rng: &mut Rng) -> Result<(DVector<f64>, DVector<f64>)> {
        let y = self.sample_arrow(rng);
        let ty = self.t.eval(y.as_slice())?;
        let z = self.sampler.arrow_from(ty.as_slice(), rng);
        Ok((z, y))
    }

    /// A composable triple `(w, z, y)`.
    pub fn sample_triple(
        &self,
        rng: &mut Rng,
    ) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let (z, y) = self.sample_pair(rng)?;
        let tz = self.t.eval(z.as_slice())?;
        let w = self.sampler.arrow_from(tz.as_slice(), rng);
        Ok((w, z, y))
    }

    /// `z∘y`, after checking composability.
    pub fn compose(&self, z: &[f64], y: &[f64]) -> Result<DVector<f64>> {
        self.check_composable(z, y)?;
        self.m.eval(&concat(z, y))
    }

    fn check_composable(&self, z: &[f64], y: &[f64]) -> Result<()> {
        let gap = dist(self.t.eval(y)?.as_slice(), self.s.eval(z)?.as_slice());
        if !(gap <= COMPOSABLE_TOL) {
            return Err(GeomError::Precondition(format!(
                "arrows are not composable: |t(y) - s(z)| = {gap:.3e}"
            )));
        }
        Ok(())
    }

    pub fn ds(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        jacobian(&self.s, y)
    }

    pub fn dt(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        jacobian(&self.t, y)
    }

    /// The structure maps with their names, for differentiation checks.
    pub fn structure_maps(&self) -> [(&'static str, &SmoothMap); 5] {
        [
            ("s", &self.s),
            ("t", &self.t),
            ("m", &self.m),
            ("e", &self.e),
            ("i", &self.i),
        ]
    }
}

pub(crate) fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// Outcome of [`check_groupoid_axioms`].
#[derive(Clone, Debug, PartialEq)]
pub struct GroupoidAxiomReport {
    pub residuals: Residuals,
    /// Smallest singular value of `ds` over the samples.
    pub min_source_singular_value: f64,
}

/// Samples the groupoid axioms and the submersion condition on `s`.
pub fn check_groupoid_axioms(
    g: &LieGroupoid,
    n_samples: usize,
    seed: u64,
) -> Result<GroupoidAxiomReport> {
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    let mut min_sv = f64::INFINITY;
    for _ in 0..n_samples {
        let x = g.sample_object(&mut rng);
        let y0 = g.sampler.arrow_from(x.as_slice(), &mut rng);
        let sampler_gap = dist(g.s.eval(y0.as_slice())?.as_slice(), x.as_slice());
        if !(sampler_gap <= 1e-6) {
            return Err(GeomError::Config(format!(
                "sampler returned an arrow whose source is off by {sampler_gap:.3e}"
            )));
        }

        let ex = g.e.eval(x.as_slice())?;
        r.record("s_of_unit", dist(g.s.eval(ex.as_slice())?.as_slice(), x.as_slice()));
        r.record("t_of_unit", dist(g.t.eval(ex.as_slice())?.as_slice(), x.as_slice()));

        let (w, z, y) = g.sample_triple(&mut rng)?;
        let (w, z, y) = (w.as_slice(), z.as_slice(), y.as_slice());
        // Products whose composability itself depends on an axiom (inverses,
        // units) are evaluated anyway; the gap is reported as a residual.
        let mut compose = |a: &[f64], b: &[f64]| -> Result<DVector<f64>> {
            let gap = dist(g.t.eval(b)?.as_slice(), g.s.eval(a)?.as_slice());
            r.record("composability", gap);
            g.m.eval(&concat(a, b))
        };
        let zy = compose(z, y)?;
        let wz = compose(w, z)?;
        let left = compose(wz.as_slice(), y)?;
        let right = compose(w, zy.as_slice())?;
        let iy = g.i.eval(y)?;
        let sy = g.s.eval(y)?;
        let ty = g.t.eval(y)?;
        let e_sy = g.e.eval(sy.as_slice())?;
        let e_ty = g.e.eval(ty.as_slice())?;
        let iy_y = compose(iy.as_slice(), y)?;
        let y_iy = compose(y, iy.as_slice())?;
        let ety_y = compose(e_ty.as_slice(), y)?;
        let y_esy = compose(y, e_sy.as_slice())?;

        r.record(
            "source_of_product",
            dist(g.s.eval(zy.as_slice())?.as_slice(), g.s.eval(y)?.as_slice()),
        );
        r.record(
            "target_of_product",
            dist(g.t.eval(zy.as_slice())?.as_slice(), g.t.eval(z)?.as_slice()),
        );
        r.record("associativity", dist(left.as_slice(), right.as_slice()));
        r.record("left_inverse", dist(iy_y.as_slice(), e_sy.as_slice()));
        r.record("right_inverse", dist(y_iy.as_slice(), e_ty.as_slice()));
        r.record("left_unit", dist(ety_y.as_slice(), y));
        r.record("right_unit", dist(y_esy.as_slice(), y));

        min_sv = min_sv.min(min_singular_value(&g.ds(y)?));
    }
    Ok(GroupoidAxiomReport {
        residuals: r,
        min_source_singular_value: min_sv,
    })
}

/// Composition in the tangent groupoid: `(w_z, w_y) -> dm (w_z, w_y)`.
pub fn dm_compose(
    g: &LieGroupoid,
    z: &[f64],
    w_z: &[f64],
    y: &[f64],
    w_y: &[f64],
) -> Result<DVector<f64>> {
    if w_z.len() != g.dim_arr || w_y.len() != g.dim_arr {
        return Err(GeomError::DimensionMismatch {
            context: "tangent vectors in dm_compose",
            expected: g.dim_arr,
            actual: if w_z.len() != g.dim_arr { w_z.len() } else { w_y.len() },
        });
    }
    g.check_composable(z, y)?;
    let dt_wy = g.dt(y)? * DVector::from_column_slice(w_y);
    let ds_wz = g.ds(z)? * DVector::from_column_slice(w_z);
    let gap = (&dt_wy - &ds_wz).norm();
    if !(gap <= COMPOSABLE_TOL * (1.0 + dt_wy.norm())) {
        return Err(GeomError::Precondition(format!(
            "tangent vectors are not composable: |dt(w_y) - ds(w_z)| = {gap:.3e}"
        )));
    }
    let (_, dm) = g.m.directional(&concat(z, y), &concat(w_z, w_y))?;
    Ok(dm)
}

/// A pair of maps `(phi0, phi1)` between two groupoids.
#[derive(Clone, Debug)]
pub struct GroupoidMorphism {
    pub source: LieGroupoid,
    pub target: LieGroupoid,
    pub phi0: SmoothMap,
    pub phi1: SmoothMap,
}

impl GroupoidMorphism {
    pub fn new(
        source: LieGroupoid,
        target: LieGroupoid,
        phi0: SmoothMap,
        phi1: SmoothMap,
    ) -> Result<Self> {
        expect_dims(&phi0, "object map", source.dim_obj, target.dim_obj)?;
        expect_dims(&phi1, "arrow map", source.dim_arr, target.dim_arr)?;
        Ok(Self {
            source,
            target,
            phi0,
            phi1,
        })
    }

    pub fn identity(g: &LieGroupoid) -> Self {
        Self {
            source: g.clone(),
            target: g.clone(),
            phi0: SmoothMap::identity(g.dim_obj),
            phi1: SmoothMap::identity(g.dim_arr),
        }
    }
}

/// Residuals of `phi` commuting with `s`, `t`, `m` and `e`.
pub fn check_morphism(phi: &GroupoidMorphism, n_samples: usize, seed: u64) -> Result<Residuals> {
    let (a, b) = (&phi.source, &phi.target);
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    for _ in 0..n_samples {
        let (z, y) = a.sample_pair(&mut rng)?;
        let (z, y) = (z.as_slice(), y.as_slice());
        let py = phi.phi1.eval(y)?;
        let pz = phi.phi1.eval(z)?;
        r.record(
            "source",
            dist(
                phi.phi0.eval(a.s.eval(y)?.as_slice())?.as_slice(),
                b.s.eval(py.as_slice())?.as_slice(),
            ),
        );
        r.record(
            "target",
            dist(
                phi.phi0.eval(a.t.eval(y)?.as_slice())?.as_slice(),
                b.t.eval(py.as_slice())?.as_slice(),
            ),
        );
        let lhs = phi.phi1.eval(a.compose(z, y)?.as_slice())?;
        let rhs = b.m.eval(&concat(pz.as_slice(), py.as_slice()))?;
        r.record("multiplication", dist(lhs.as_slice(), rhs.as_slice()));
        let x = a.sample_object(&mut rng);
        r.record(
            "unit",
            dist(
                phi.phi1.eval(a.e.eval(x.as_slice())?.as_slice())?.as_slice(),
                b.e.eval(phi.phi0.eval(x.as_slice())?.as_slice())?.as_slice(),
            ),
        );
    }
    Ok(r)
}

/// Outcome of [`check_morita`]. Surjectivity of `phi0` is not sampled.
#[derive(Clone, Debug, PartialEq)]
pub struct MoritaReport {
    /// Smallest singular value of `d phi0`, reported as the `dim Y0`-th one.
    pub min_object_singular_value: f64,
    /// `dim X1 - (dim Y1 + 2 dim X0 - 2 dim Y0)`; zero for a Cartesian square.
    pub dimension_defect: i64,
    /// Smallest singular value of `[d phi1; ds; dt]`.
    pub min_cartesian_singular_value: f64,
}

impl MoritaReport {
    pub fn is_morita(&self, rank_tol: f64) -> bool {
        self.dimension_defect == 0
            && self.min_object_singular_value > rank_tol
            && self.min_cartesian_singular_value > rank_tol
    }
}

pub fn check_morita(phi: &GroupoidMorphism, n_samples: usize, seed: u64) -> Result<MoritaReport> {
    let (a, b) = (&phi.source, &phi.target);
    let expected = b.dim_arr as i64 + 2 * a.dim_obj as i64 - 2 * b.dim_obj as i64;
    let mut rng = sampling::rng(seed);
    let mut obj_sv = f64::INFINITY;
    let mut cart_sv = f64::INFINITY;
    for _ in 0..n_samples {
        let x = a.sample_object(&mut rng);
        let dphi0 = jacobian(&phi.phi0, x.as_slice())?;
        obj_sv = obj_sv.min(if b.dim_obj > a.dim_obj {
            0.0
        } else {
            min_singular_value(&dphi0)
        });

        let y = a.sample_arrow(&mut rng);
        let dphi1 = jacobian(&phi.phi1, y.as_slice())?;
        let ds = a.ds(y.as_slice())?;
        let dt = a.dt(y.as_slice())?;
        let mut stacked = DMatrix::zeros(b.dim_arr + 2 * a.dim_obj, a.dim_arr);
        stacked.rows_mut(0, b.dim_arr).copy_from(&dphi1);
        stacked.rows_mut(b.dim_arr, a.dim_obj).copy_from(&ds);
        stacked.rows_mut(b.dim_arr + a.dim_obj, a.dim_obj).copy_from(&dt);
        let sv = crate::smooth::singular_values(&stacked);
        // injectivity: all dim_arr singular values must be positive
        cart_sv = cart_sv.min(if sv.len() < a.dim_arr {
            0.0
        } else {
            sv.into_iter().fold(f64::INFINITY, f64::min)
        });
    }
    Ok(MoritaReport {
        min_object_singular_value: obj_sv,
        dimension_defect: a.dim_arr as i64 - expected,
        min_cartesian_singular_value: cart_sv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_r1() -> LieGroupoid {
        LieGroupoid::new(
            1,
            2,
            SmoothMap::new(2, 1, |p| vec![p[1]]),
            SmoothMap::new(2, 1, |p| vec![p[0]]),
            SmoothMap::new(4, 2, |p| vec![p[0], p[3]]),
            SmoothMap::new(1, 2, |p| vec![p[0], p[0]]),
            SmoothMap::new(2, 2, |p| vec![p[1], p[0]]),
            Sampler::new(
                |rng| sampling::uniform_box(rng, 1, -1.0, 1.0),
                |x, rng| DVector::from_vec(vec![sampling::uniform(rng, -1.0, 1.0), x[0]]),
            ),
        )
        .unwrap()
    }

    #[test]
    fn unit_groupoid_axioms_are_exact() {
        let rep = check_groupoid_axioms(&LieGroupoid::unit(2, -1.0, 1.0), 20, 1).unwrap();
        assert_eq!(rep.residuals.max(), 0.0);
        assert_eq!(rep.min_source_singular_value, 1.0);
    }

    #[test]
    fn pair_groupoid_axioms_are_exact() {
        let rep = check_groupoid_axioms(&pair_r1(), 20, 1).unwrap();
        assert_eq!(rep.residuals.max(), 0.0);
        assert!((rep.min_source_singular_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dm_compose_on_pair_groupoid() {
        let g = pair_r1();
        let out = dm_compose(&g, &[0.1, 0.2], &[1.0, 2.0], &[0.2, 0.3], &[2.0, 3.0]).unwrap();
        assert!((out - DVector::from_vec(vec![1.0, 3.0])).norm() < 1e-14);
        let zero = dm_compose(&g, &[0.1, 0.2], &[0.0, 0.0], &[0.2, 0.3], &[0.0, 0.0]).unwrap();
        assert_eq!(zero.norm(), 0.0);
    }

    #[test]
    fn dm_compose_on_unit_groupoid() {
        let g = LieGroupoid::unit(1, -1.0, 1.0);
        let out = dm_compose(&g, &[0.4], &[2.5], &[0.4], &[2.5]).unwrap();
        assert_eq!(out[0], 2.5);
    }

    #[test]
    fn dm_compose_rejects_non_composable() {
        let g = pair_r1();
        assert!(matches!(
            dm_compose(&g, &[0.1, 0.2], &[0.0, 0.0], &[0.5, 0.3], &[0.0, 0.0]),
            Err(GeomError::Precondition(_))
        ));
        assert!(matches!(
            dm_compose(&g, &[0.1, 0.2], &[0.0, 1.0], &[0.2, 0.3], &[0.0, 0.0]),
            Err(GeomError::Precondition(_))
        ));
    }

    #[test]
    fn identity_morphism_is_morita() {
        let g = pair_r1();
        let phi = GroupoidMorphism::identity(&g);
        assert_eq!(check_morphism(&phi, 10, 3).unwrap().max(), 0.0);
        assert!(check_morita(&phi, 10, 3).unwrap().is_morita(1e-9));
    }

    #[test]
    fn broken_sampler_is_a_config_error() {
        let mut g = pair_r1();
        g.sampler = Sampler::new(
            |rng| sampling::uniform_box(rng, 1, -1.0, 1.0),
            |x, _| DVector::from_vec(vec![0.0, x[0] + 1.0]),
        );
        assert!(matches!(check_groupoid_axioms(&g, 3, 0), Err(GeomError::Config(_))));
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let g = pair_r1();
        let err = LieGroupoid::new(1, 2, g.t.clone(), g.s.clone(), g.m.clone(), g.i.clone(), g.i.clone(), g.sampler.clone());
        assert!(matches!(err, Err(GeomError::DimensionMismatch { .. })));
    }
}
