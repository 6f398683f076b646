//! Connections on Lie groupoids: horizontal distributions complementary to
//! the source fibres, their transport maps, and derived groupoids.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::groupoid::{concat, dm_compose, GroupoidMorphism, LieGroupoid, Sampler};
use crate::residual::Residuals;
use crate::sampling;
use crate::smooth::{
    condition_number, inverse, jacobian, lie_bracket, min_singular_value, nullspace,
    restricted_inverse, subspace_equal, Jet, SmoothMap, SubspaceBasis, VectorField, RANK_TOL,
};

/// A distribution `H` on the arrow space, given by a global frame.
///
/// `frame` maps an arrow `y` to the `dim_arr × dim_obj` matrix, stored
/// column-major, whose columns span `H_y`.
#[derive(Clone, Debug)]
pub struct GroupoidConnection {
    pub base: LieGroupoid,
    frame: SmoothMap,
}

impl GroupoidConnection {
    pub fn new(base: LieGroupoid, frame: SmoothMap) -> Result<Self> {
        let (n, k) = (base.dim_arr, base.dim_obj);
        if frame.domain_dim() != n || frame.codomain_dim() != n * k {
            return Err(GeomError::DimensionMismatch {
                context: "connection frame",
                expected: n * k,
                actual: frame.codomain_dim(),
            });
        }
        Ok(Self { base, frame })
    }

    /// The constant frame spanned by the given columns.
    pub fn constant(base: LieGroupoid, columns: DMatrix<f64>) -> Result<Self> {
        let n = base.dim_arr;
        let values: Vec<f64> = columns.as_slice().to_vec();
        let frame = SmoothMap::new(n, values.len(), move |_| {
            values.iter().copied().map(Jet::constant).collect()
        });
        Self::new(base, frame)
    }

    pub fn frame_map(&self) -> &SmoothMap {
        &self.frame
    }

    pub fn frame_at(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let v = self.frame.eval(y)?;
        Ok(DMatrix::from_column_slice(
            self.base.dim_arr,
            self.base.dim_obj,
            v.as_slice(),
        ))
    }

    pub fn horizontal(&self, y: &[f64]) -> Result<SubspaceBasis> {
        SubspaceBasis::new(self.frame_at(y)?)
    }

    /// Column `j` of the frame as a vector field on the arrow space.
    pub fn frame_field(&self, j: usize) -> VectorField {
        let n = self.base.dim_arr;
        let frame = self.frame.clone();
        let map = SmoothMap::new(n, n, move |p| frame.eval_jets(p)[j * n..(j + 1) * n].to_vec());
        VectorField::new(map).expect("frame column is square")
    }
}

/// `ker ds` at `y`, of rank `dim_arr - dim_obj`.
pub fn vertical_space(g: &LieGroupoid, y: &[f64]) -> Result<SubspaceBasis> {
    let k = nullspace(&g.ds(y)?, RANK_TOL);
    let expected = g.dim_arr - g.dim_obj;
    if k.rank() != expected {
        return Err(GeomError::Submersion {
            expected,
            actual: k.rank(),
        });
    }
    Ok(k)
}

/// Transport `theta_y = dt ∘ (ds|_H)^{-1}` from `T_{s(y)}X0` to `T_{t(y)}X0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportMap {
    pub y: DVector<f64>,
    pub theta: DMatrix<f64>,
}

/// Horizontal lift `(ds|_H)^{-1}` at `y`, a `dim_arr × dim_obj` matrix.
pub fn horizontal_lift(c: &GroupoidConnection, y: &[f64]) -> Result<DMatrix<f64>> {
    restricted_inverse(&c.base.ds(y)?, &c.horizontal(y)?)
}

pub fn theta(c: &GroupoidConnection, y: &[f64]) -> Result<TransportMap> {
    let theta = c.base.dt(y)? * horizontal_lift(c, y)?;
    Ok(TransportMap {
        y: DVector::from_column_slice(y),
        theta,
    })
}

/// `y -> vec(theta_y)` as a smooth map. Derivatives are lifted.
pub fn theta_map(c: &GroupoidConnection) -> SmoothMap {
    let k = c.base.dim_obj;
    let c = c.clone();
    SmoothMap::from_real(c.base.dim_arr, k * k, move |y| match theta(&c, y) {
        Ok(t) => t.theta.as_slice().to_vec(),
        Err(_) => vec![f64::NAN; k * k],
    })
}

/// Condition number of `[orth(K_y) | orth(H_y)]`: finite iff the two spaces
/// are complementary.
pub fn transversality_condition(c: &GroupoidConnection, y: &[f64]) -> Result<f64> {
    let k = vertical_space(&c.base, y)?.orthonormal();
    let h = c.horizontal(y)?.orthonormal();
    let n = c.base.dim_arr;
    let mut stacked = DMatrix::zeros(n, k.ncols() + h.ncols());
    stacked.columns_mut(0, k.ncols()).copy_from(&k);
    stacked.columns_mut(k.ncols(), h.ncols()).copy_from(&h);
    if stacked.ncols() != n {
        return Ok(f64::INFINITY);
    }
    Ok(condition_number(&stacked))
}

/// Unit axiom: `image(de_x) = H_{e(x)}`.
pub fn check_unit_axiom(c: &GroupoidConnection, n_samples: usize, seed: u64) -> Result<Residuals> {
    let g = &c.base;
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    for _ in 0..n_samples {
        let x = g.sample_object(&mut rng);
        let de = SubspaceBasis::new(jacobian(&g.e, x.as_slice())?)?;
        let ex = g.e.eval(x.as_slice())?;
        r.record("unit", subspace_equal(&de, &c.horizontal(ex.as_slice())?)?);
    }
    Ok(r)
}

/// Composition axiom: `theta_{z∘y} = theta_z theta_y` in Frobenius norm.
pub fn check_composition_axiom(
    c: &GroupoidConnection,
    n_pairs: usize,
    seed: u64,
) -> Result<Residuals> {
    let g = &c.base;
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    for _ in 0..n_pairs {
        let (z, y) = g.sample_pair(&mut rng)?;
        let zy = g.compose(z.as_slice(), y.as_slice())?;
        let lhs = theta(c, zy.as_slice())?.theta;
        let rhs = theta(c, z.as_slice())?.theta * theta(c, y.as_slice())?.theta;
        r.record("composition", (lhs - rhs).norm());
    }
    Ok(r)
}

/// The obstruction vector at a composable pair, and the size of its image
/// under `dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Obstruction {
    pub k: DVector<f64>,
    pub dt_norm: f64,
}

/// `lift_{z∘y}(v) - lift_z(theta_y v) ∘ lift_y(v)`, composed in the tangent
/// groupoid. Always lies in `ker ds`.
pub fn obstruction_k(
    c: &GroupoidConnection,
    z: &[f64],
    y: &[f64],
    v: &[f64],
) -> Result<Obstruction> {
    let g = &c.base;
    if v.len() != g.dim_obj {
        return Err(GeomError::DimensionMismatch {
            context: "obstruction direction",
            expected: g.dim_obj,
            actual: v.len(),
        });
    }
    let v = DVector::from_column_slice(v);
    let zy = g.compose(z, y)?;
    let lift_y = horizontal_lift(c, y)? * &v;
    let theta_y_v = theta(c, y)?.theta * &v;
    let lift_z = horizontal_lift(c, z)? * theta_y_v;
    let composed = dm_compose(g, z, lift_z.as_slice(), y, lift_y.as_slice())?;
    let k = horizontal_lift(c, zy.as_slice())? * &v - composed;
    let dt_norm = (g.dt(zy.as_slice())? * &k).norm();
    Ok(Obstruction { k, dt_norm })
}

/// Largest `|K|` and `|dt K|` over sampled pairs and probe directions.
pub fn check_functor_property(
    c: &GroupoidConnection,
    n_pairs: usize,
    seed: u64,
) -> Result<Residuals> {
    let g = &c.base;
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    for _ in 0..n_pairs {
        let (z, y) = g.sample_pair(&mut rng)?;
        for v in sampling::probe_directions(&mut rng, g.dim_obj, 2) {
            let o = obstruction_k(c, z.as_slice(), y.as_slice(), v.as_slice())?;
            r.record("obstruction", o.k.norm());
            r.record("obstruction_dt", o.dt_norm);
        }
    }
    Ok(r)
}

/// Pointwise involutivity: `|(I - P_H)[u_i, u_j]|` over frame columns.
pub fn check_integrable(c: &GroupoidConnection, n_samples: usize, seed: u64) -> Result<Residuals> {
    let g = &c.base;
    let fields: Vec<VectorField> = (0..g.dim_obj).map(|j| c.frame_field(j)).collect();
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    r.record("involutivity", 0.0);
    for _ in 0..n_samples {
        let y = g.sample_arrow(&mut rng);
        let p = c.horizontal(y.as_slice())?.projector();
        let complement = DMatrix::identity(g.dim_arr, g.dim_arr) - p;
        for i in 0..fields.len() {
            for j in i + 1..fields.len() {
                let b = lie_bracket(&fields[i], &fields[j], y.as_slice())?;
                r.record("involutivity", (&complement * b).norm());
            }
        }
    }
    Ok(r)
}

/// Pulls a connection on the target of `phi` back to its source.
///
/// At an arrow `y` the new horizontal space is cut out of `T_y X1` by two
/// linear conditions: `d phi1 (w)` is horizontal upstairs, and
/// `dt(w) = theta~ ds(w)` where `theta~` transports the part of `T X0` seen
/// by `d phi0` with the original `theta` and the part along the fibres of
/// `phi0` by the identity. For an étale `phi` the second condition follows
/// from the first. The frame is normalised so that `ds · frame = I`.
pub fn pullback_connection(
    phi: &GroupoidMorphism,
    c: &GroupoidConnection,
) -> Result<GroupoidConnection> {
    let src = phi.source.clone();
    let (n, k) = (src.dim_arr, src.dim_obj);
    let phi_c = phi.clone();
    let c_up = c.clone();
    let frame_at = move |y: &[f64]| -> Result<DMatrix<f64>> {
        let a = &phi_c.source;
        let py = phi_c.phi1.eval(y)?;
        let proj_up = c_up.horizontal(py.as_slice())?.projector();
        let off_h = (DMatrix::identity(c_up.base.dim_arr, c_up.base.dim_arr) - proj_up)
            * jacobian(&phi_c.phi1, y)?;

        let sy = a.s.eval(y)?;
        let ty = a.t.eval(y)?;
        let dphi0_s = jacobian(&phi_c.phi0, sy.as_slice())?;
        let dphi0_t = jacobian(&phi_c.phi0, ty.as_slice())?;
        let theta_up = theta(&c_up, py.as_slice())?.theta;
        let ker_s = nullspace(&dphi0_s, RANK_TOL).projector();
        let ker_t = nullspace(&dphi0_t, RANK_TOL).projector();
        let pinv_t = dphi0_t
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| GeomError::Precondition(e.to_string()))?;
        let theta_tilde = pinv_t * theta_up * dphi0_s + ker_t * ker_s;
        let transport = a.dt(y)? - theta_tilde * a.ds(y)?;

        let mut stacked = DMatrix::zeros(off_h.nrows() + transport.nrows(), n);
        stacked.rows_mut(0, off_h.nrows()).copy_from(&off_h);
        stacked
            .rows_mut(off_h.nrows(), transport.nrows())
            .copy_from(&transport);
        let h = nullspace(&stacked, 1e-8);
        if h.rank() != k {
            return Err(GeomError::PullbackDegenerate {
                expected: k,
                actual: h.rank(),
            });
        }
        restricted_inverse(&a.ds(y)?, &h)
    };

    // Validate on a few arrows so that degeneracy is reported up front.
    let mut rng = sampling::rng(0x5eed);
    for _ in 0..5 {
        let y = src.sample_arrow(&mut rng);
        frame_at(y.as_slice())?;
    }

    let frame = SmoothMap::from_real(n, n * k, move |y| match frame_at(y) {
        Ok(f) => f.as_slice().to_vec(),
        Err(_) => vec![f64::NAN; n * k],
    });
    GroupoidConnection::new(src, frame)
}

fn mat_vec(m: &[Jet], rows: usize, v: &[Jet]) -> Vec<Jet> {
    (0..rows)
        .map(|r| {
            v.iter()
                .enumerate()
                .fold(Jet::constant(0.0), |acc, (c, &x)| acc + m[r + c * rows] * x)
        })
        .collect()
}

fn jets_inverse(m: &[Jet], n: usize) -> Vec<Jet> {
    let a = DMatrix::from_column_slice(n, n, m);
    match inverse(&a) {
        Some(inv) => inv.as_slice().to_vec(),
        None => vec![Jet::constant(f64::NAN); n * n],
    }
}

fn vector_sampler(g: &LieGroupoid, arrow_vector: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static) -> Sampler {
    let (k, g1, g2) = (g.dim_obj, g.clone(), g.clone());
    Sampler::new(
        move |rng| {
            let x = g1.sample_object(rng);
            let v = sampling::uniform_box(rng, k, -1.0, 1.0);
            DVector::from_vec(concat(x.as_slice(), v.as_slice()))
        },
        move |xv, rng| {
            let y = g2.sampler.arrow_from(&xv[..k], rng);
            let v = arrow_vector(y.as_slice(), &xv[k..]);
            DVector::from_vec(concat(y.as_slice(), &v))
        },
    )
}

/// The groupoid `[s*TX0 => TX0]`: arrows `(y, v)` with `v` at `s(y)`,
/// source `(s y, v)`, target `(t y, theta_y v)`, product
/// `(z, theta_y v)∘(y, v) = (z∘y, v)`.
///
/// It is a Lie groupoid exactly when the connection satisfies both axioms;
/// this is the groupoid making `TX0` a vector bundle over `[X1 => X0]`.
pub fn transport_groupoid(c: &GroupoidConnection) -> LieGroupoid {
    let g = &c.base;
    let (n, k) = (g.dim_arr, g.dim_obj);
    let th = theta_map(c);
    let (s, t, m, e, i) = (g.s.clone(), g.t.clone(), g.m.clone(), g.e.clone(), g.i.clone());

    let s2 = SmoothMap::new(n + k, 2 * k, move |p| {
        let mut out = s.eval_jets(&p[..n]);
        out.extend_from_slice(&p[n..]);
        out
    });
    let th_t = th.clone();
    let t2 = SmoothMap::new(n + k, 2 * k, move |p| {
        let mut out = t.eval_jets(&p[..n]);
        out.extend(mat_vec(&th_t.eval_jets(&p[..n]), k, &p[n..]));
        out
    });
    let m2 = SmoothMap::new(2 * (n + k), n + k, move |p| {
        let z = &p[..n];
        let y = &p[n + k..2 * n + k];
        let mut zy: Vec<Jet> = z.to_vec();
        zy.extend_from_slice(y);
        let mut out = m.eval_jets(&zy);
        out.extend_from_slice(&p[2 * n + k..]);
        out
    });
    let e2 = SmoothMap::new(2 * k, n + k, move |p| {
        let mut out = e.eval_jets(&p[..k]);
        out.extend_from_slice(&p[k..]);
        out
    });
    let i2 = SmoothMap::new(n + k, n + k, move |p| {
        let mut out = i.eval_jets(&p[..n]);
        out.extend(mat_vec(&th.eval_jets(&p[..n]), k, &p[n..]));
        out
    });
    let sampler = vector_sampler(g, |_, v| v.to_vec());
    LieGroupoid::new(2 * k, n + k, s2, t2, m2, e2, i2, sampler)
        .expect("transport groupoid dimensions are consistent")
}

/// `[s*TX0 => TX0]`; identical to [`transport_groupoid`].
pub fn s_star_groupoid(c: &GroupoidConnection) -> LieGroupoid {
    transport_groupoid(c)
}

/// The groupoid `[t*TX0 => TX0]`: arrows `(y, u)` with `u` at `t(y)`,
/// source `(s y, theta_y^{-1} u)`, target `(t y, u)`, product
/// `(z, u_z)∘(y, u_y) = (z∘y, u_z)`.
pub fn t_star_groupoid(c: &GroupoidConnection) -> LieGroupoid {
    let g = &c.base;
    let (n, k) = (g.dim_arr, g.dim_obj);
    let th = theta_map(c);
    let (s, t, m, e, i) = (g.s.clone(), g.t.clone(), g.m.clone(), g.e.clone(), g.i.clone());

    let th_s = th.clone();
    let s2 = SmoothMap::new(n + k, 2 * k, move |p| {
        let mut out = s.eval_jets(&p[..n]);
        out.extend(mat_vec(&jets_inverse(&th_s.eval_jets(&p[..n]), k), k, &p[n..]));
        out
    });
    let t2 = SmoothMap::new(n + k, 2 * k, move |p| {
        let mut out = t.eval_jets(&p[..n]);
        out.extend_from_slice(&p[n..]);
        out
    });
    let m2 = SmoothMap::new(2 * (n + k), n + k, move |p| {
        let z = &p[..n];
        let y = &p[n + k..2 * n + k];
        let mut zy: Vec<Jet> = z.to_vec();
        zy.extend_from_slice(y);
        let mut out = m.eval_jets(&zy);
        out.extend_from_slice(&p[n..n + k]);
        out
    });
    let e2 = SmoothMap::new(2 * k, n + k, move |p| {
        let mut out = e.eval_jets(&p[..k]);
        out.extend_from_slice(&p[k..]);
        out
    });
    let i2 = SmoothMap::new(n + k, n + k, move |p| {
        let mut out = i.eval_jets(&p[..n]);
        out.extend(mat_vec(&jets_inverse(&th.eval_jets(&p[..n]), k), k, &p[n..]));
        out
    });
    let c2 = c.clone();
    let sampler = vector_sampler(g, move |y, v| match theta(&c2, y) {
        Ok(t) => (t.theta * DVector::from_column_slice(v)).as_slice().to_vec(),
        Err(_) => vec![f64::NAN; v.len()],
    });
    LieGroupoid::new(2 * k, n + k, s2, t2, m2, e2, i2, sampler)
        .expect("t* groupoid dimensions are consistent")
}

/// `(y, v) -> (y, theta_y v)` from `[s*TX0 => TX0]` to `[t*TX0 => TX0]`,
/// identity on objects.
pub fn theta_iso(c: &GroupoidConnection) -> GroupoidMorphism {
    let (n, k) = (c.base.dim_arr, c.base.dim_obj);
    let th = theta_map(c);
    let phi1 = SmoothMap::new(n + k, n + k, move |p| {
        let mut out = p[..n].to_vec();
        out.extend(mat_vec(&th.eval_jets(&p[..n]), k, &p[n..]));
        out
    });
    GroupoidMorphism {
        source: s_star_groupoid(c),
        target: t_star_groupoid(c),
        phi0: SmoothMap::identity(2 * k),
        phi1,
    }
}

/// Morphism residuals of [`theta_iso`] and invertibility of `theta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaIsoReport {
    pub residuals: Residuals,
    pub min_theta_singular_value: f64,
}

pub fn theta_iso_check(c: &GroupoidConnection, n_samples: usize, seed: u64) -> Result<ThetaIsoReport> {
    let residuals = crate::groupoid::check_morphism(&theta_iso(c), n_samples, seed)?;
    let mut rng = sampling::rng(seed ^ 0x9e37_79b9);
    let mut min_sv = f64::INFINITY;
    for _ in 0..n_samples {
        let y = c.base.sample_arrow(&mut rng);
        min_sv = min_sv.min(min_singular_value(&theta(c, y.as_slice())?.theta));
    }
    Ok(ThetaIsoReport {
        residuals,
        min_theta_singular_value: min_sv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::check_groupoid_axioms;

    fn pair_r1(frame: fn(&[Jet]) -> Vec<Jet>) -> GroupoidConnection {
        let g = LieGroupoid::new(
            1,
            2,
            SmoothMap::new(2, 1, |p| vec![p[1]]),
            SmoothMap::new(2, 1, |p| vec![p[0]]),
            SmoothMap::new(4, 2, |p| vec![p[0], p[3]]),
            SmoothMap::new(1, 2, |p| vec![p[0], p[0]]),
            SmoothMap::new(2, 2, |p| vec![p[1], p[0]]),
            Sampler::new(
                |rng| sampling::uniform_box(rng, 1, -2.0, 2.0),
                |x, rng| DVector::from_vec(vec![sampling::uniform(rng, -2.0, 2.0), x[0]]),
            ),
        )
        .unwrap();
        GroupoidConnection::new(g, SmoothMap::new(2, 2, frame)).unwrap()
    }

    fn diagonal(_: &[Jet]) -> Vec<Jet> {
        vec![Jet::constant(1.0), Jet::constant(1.0)]
    }

    fn perturbed(p: &[Jet]) -> Vec<Jet> {
        vec![p[1] * p[1] + 1.0, Jet::constant(1.0)]
    }

    #[test]
    fn unit_groupoid_has_trivial_vertical_space_and_identity_transport() {
        let g = LieGroupoid::unit(1, -1.0, 1.0);
        assert_eq!(vertical_space(&g, &[0.3]).unwrap().rank(), 0);
        let c = GroupoidConnection::constant(g, DMatrix::identity(1, 1)).unwrap();
        assert_eq!(theta(&c, &[0.3]).unwrap().theta, DMatrix::identity(1, 1));
        assert_eq!(check_integrable(&c, 5, 1).unwrap().max(), 0.0);
        assert_eq!(check_functor_property(&c, 5, 1).unwrap().max(), 0.0);
    }

    #[test]
    fn pair_groupoid_vertical_space() {
        let c = pair_r1(diagonal);
        let k = vertical_space(&c.base, &[0.2, 0.5]).unwrap();
        let expected = SubspaceBasis::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert!(subspace_equal(&k, &expected).unwrap() < 1e-12);
    }

    #[test]
    fn diagonal_connection_is_multiplicative() {
        let c = pair_r1(diagonal);
        assert!((theta(&c, &[0.4, -1.2]).unwrap().theta[(0, 0)] - 1.0).abs() < 1e-14);
        assert!(check_unit_axiom(&c, 10, 2).unwrap().max() < 1e-9);
        assert!(check_composition_axiom(&c, 10, 2).unwrap().max() < 1e-12);
        assert!(check_functor_property(&c, 10, 2).unwrap().max() < 1e-12);
        assert!(transversality_condition(&c, &[0.1, 0.2]).unwrap() < 10.0);
    }

    #[test]
    fn vertical_unit_frame_is_off_by_sqrt_two() {
        fn vertical_b(_: &[Jet]) -> Vec<Jet> {
            vec![Jet::constant(0.0), Jet::constant(1.0)]
        }
        let c = pair_r1(vertical_b);
        let r = check_unit_axiom(&c, 3, 0).unwrap().max();
        // span{(0,1)} against the diagonal: |P_A - P_B|_F = 1
        let a = SubspaceBasis::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        let b = SubspaceBasis::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        assert!((r - subspace_equal(&a, &b).unwrap()).abs() < 1e-12);
        assert!(r > 0.5);
    }

    #[test]
    fn perturbed_frame_breaks_composition() {
        let c = pair_r1(perturbed);
        // (a,b,c) = (0,1,2): z = (0,1), y = (1,2)
        let lhs = theta(&c, &[0.0, 2.0]).unwrap().theta[(0, 0)];
        let rhs = theta(&c, &[0.0, 1.0]).unwrap().theta[(0, 0)] * theta(&c, &[1.0, 2.0]).unwrap().theta[(0, 0)];
        assert!((lhs - 5.0).abs() < 1e-12 && (rhs - 10.0).abs() < 1e-12);
        assert!(check_composition_axiom(&c, 10, 3).unwrap().max() > 1e-3);
        assert!(check_functor_property(&c, 10, 3).unwrap().get("obstruction").unwrap() > 1e-3);
        // a 1-dimensional distribution is always involutive
        assert_eq!(check_integrable(&c, 5, 3).unwrap().max(), 0.0);
    }

    #[test]
    fn transport_groupoid_tracks_the_axioms() {
        let good = transport_groupoid(&pair_r1(diagonal));
        assert!(check_groupoid_axioms(&good, 10, 4).unwrap().residuals.max() < 1e-9);
        let bad = transport_groupoid(&pair_r1(perturbed));
        assert!(check_groupoid_axioms(&bad, 10, 4).unwrap().residuals.max() > 1e-3);
    }

    #[test]
    fn theta_iso_on_diagonal_connection() {
        let rep = theta_iso_check(&pair_r1(diagonal), 10, 5).unwrap();
        assert!(rep.residuals.max() < 1e-9);
        assert!((rep.min_theta_singular_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_pullback_keeps_distribution() {
        let c = pair_r1(perturbed);
        let pulled = pullback_connection(&GroupoidMorphism::identity(&c.base), &c).unwrap();
        for y in [[0.3, -0.4], [1.0, 1.5]] {
            let d = subspace_equal(&c.horizontal(&y).unwrap(), &pulled.horizontal(&y).unwrap());
            assert!(d.unwrap() < 1e-10);
        }
    }
}
