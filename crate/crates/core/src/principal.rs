//! Principal `G`-bundles over Lie groupoids, trivialised as `E = X0 × G`.
//!
//! A point of `E` is flattened as `(x, vec g)` with `vec` column-major.
//! Tangent vectors are written `(xdot, eta)` with `eta = g^{-1} dg` in
//! algebra coordinates, i.e. in the chart `g·exp(xi)` around the current
//! group element.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::forms::{index_tuples, DifferentialForm, VectorValuedForm};
use crate::groupoid::{concat, GroupoidMorphism, LieGroupoid};
use crate::liegroup::{expm, InvariantPolynomial, MatrixLieGroup};
use crate::residual::{dist, Residuals};
use crate::sampling::{self, Rng};
use crate::smooth::{inverse, jacobian, lie_bracket, Jet, Real, SmoothMap, VectorField};

/// A principal bundle over `[X1 => X0]` with a groupoid action.
///
/// `action` maps `(gamma, vec g)` to `gamma·(s(gamma), g) = (x', vec g')`.
#[derive(Clone, Debug)]
pub struct PrincipalGroupoidBundle {
    pub base: LieGroupoid,
    pub group: MatrixLieGroup,
    action: SmoothMap,
}

fn unvec<T: Real>(v: &[T], n: usize) -> DMatrix<T> {
    DMatrix::from_column_slice(n, n, v)
}

impl PrincipalGroupoidBundle {
    pub fn new(base: LieGroupoid, group: MatrixLieGroup, action: SmoothMap) -> Result<Self> {
        let nn = group.matrix_size().pow(2);
        if action.domain_dim() != base.dim_arr + nn || action.codomain_dim() != base.dim_obj + nn {
            return Err(GeomError::DimensionMismatch {
                context: "bundle action",
                expected: base.dim_arr + nn,
                actual: action.domain_dim(),
            });
        }
        Ok(Self {
            base,
            group,
            action,
        })
    }

    /// The action `gamma·(s gamma, g) = (t gamma, g)`.
    pub fn trivial_action(base: LieGroupoid, group: MatrixLieGroup) -> Self {
        let (n, nn) = (base.dim_arr, group.matrix_size().pow(2));
        let t = base.t.clone();
        let action = SmoothMap::new(n + nn, base.dim_obj + nn, move |p| {
            let mut out = t.eval_jets(&p[..n]);
            out.extend_from_slice(&p[n..]);
            out
        });
        Self::new(base, group, action).expect("trivial action has consistent dimensions")
    }

    pub fn action(&self) -> &SmoothMap {
        &self.action
    }

    fn n(&self) -> usize {
        self.group.matrix_size()
    }

    /// Coordinate dimension of `E`: `dim X0 + dim G`.
    pub fn total_dim(&self) -> usize {
        self.base.dim_obj + self.group.dim()
    }

    pub fn point(&self, x: &[f64], g: &DMatrix<f64>) -> Vec<f64> {
        concat(x, g.as_slice())
    }

    pub fn split_point(&self, p: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let k = self.base.dim_obj;
        (DVector::from_column_slice(&p[..k]), unvec(&p[k..], self.n()))
    }

    pub fn act(&self, gamma: &[f64], g: &DMatrix<f64>) -> Result<Vec<f64>> {
        Ok(self.action.eval(&concat(gamma, g.as_slice()))?.as_slice().to_vec())
    }

    pub fn sample_group_element(&self, rng: &mut Rng) -> DMatrix<f64> {
        let xi = sampling::uniform_box(rng, self.group.dim(), -1.0, 1.0);
        self.group.exp(xi.as_slice())
    }

    /// Jets of the curve `(x + eps xdot, g + eps g eta)`.
    fn tangent_jets(&self, x: &[f64], g: &DMatrix<f64>, xdot: &[f64], eta: &[f64]) -> Vec<Jet> {
        let dg = g * self.group.matrix_of(eta);
        x.iter()
            .zip(xdot)
            .map(|(&a, &b)| Jet::new(a, b))
            .chain(g.iter().zip(dg.iter()).map(|(&a, &b)| Jet::new(a, b)))
            .collect()
    }

    /// Reads `(point, [xdot; eta])` back from jets of a point of `E`.
    fn read_tangent(&self, jets: &[Jet]) -> Result<(Vec<f64>, DVector<f64>)> {
        let k = self.base.dim_obj;
        let n = self.n();
        let p: Vec<f64> = jets.iter().map(|j| j.re).collect();
        if p.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::EvaluationDomain("bundle map".into()));
        }
        let g = unvec(&p[k..], n);
        let dg = DMatrix::from_iterator(n, n, jets[k..].iter().map(|j| j.eps));
        let g_inv = g
            .try_inverse()
            .ok_or_else(|| GeomError::EvaluationDomain("singular group element".into()))?;
        let eta = self.group.coords_of(&(g_inv * dg))?;
        let xdot: Vec<f64> = jets[..k].iter().map(|j| j.eps).collect();
        Ok((p, DVector::from_vec(concat(&xdot, eta.as_slice()))))
    }
}

/// Residuals of the action axioms: covering `t`, unit, associativity and
/// commuting with the right `G`-action.
pub fn check_bundle_action(
    b: &PrincipalGroupoidBundle,
    n_samples: usize,
    seed: u64,
) -> Result<Residuals> {
    let g = &b.base;
    let k = g.dim_obj;
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    for _ in 0..n_samples {
        let (delta, gamma) = g.sample_pair(&mut rng)?;
        let (delta, gamma) = (delta.as_slice(), gamma.as_slice());
        let h = b.sample_group_element(&mut rng);
        let gm = b.sample_group_element(&mut rng);
        let x = g.s.eval(gamma)?;

        let moved = b.act(gamma, &gm)?;
        r.record("covers_target", dist(&moved[..k], g.t.eval(gamma)?.as_slice()));

        let ex = g.e.eval(x.as_slice())?;
        let fixed = b.act(ex.as_slice(), &gm)?;
        r.record("unit", dist(&fixed, &b.point(x.as_slice(), &gm)));

        let (_, g1) = b.split_point(&moved);
        let twice = b.act(delta, &g1)?;
        let product = g.compose(delta, gamma)?;
        let once = b.act(product.as_slice(), &gm)?;
        r.record("associativity", dist(&twice, &once));

        let lhs = b.act(gamma, &(&gm * &h))?;
        let (x1, g1) = b.split_point(&moved);
        let rhs = b.point(x1.as_slice(), &(g1 * &h));
        r.record("equivariance", dist(&lhs, &rhs));
    }
    Ok(r)
}

/// A connection form `omega` on `E`, stored as the `d × (dim X0 + d)` matrix
/// `[Omega_x | Omega_eta]` acting on `(xdot, eta)`.
#[derive(Clone, Debug)]
pub struct ConnectionForm {
    pub bundle: PrincipalGroupoidBundle,
    omega: SmoothMap,
}

fn twisted_potential(
    bundle: &PrincipalGroupoidBundle,
    potential: &VectorValuedForm,
    twist: bool,
) -> Result<ConnectionForm> {
    let (k, d, n) = (bundle.base.dim_obj, bundle.group.dim(), bundle.n());
    if potential.ambient_dim() != k || potential.degree() != 1 || potential.width() != d {
        return Err(GeomError::DimensionMismatch {
            context: "gauge potential",
            expected: d,
            actual: potential.width(),
        });
    }
    let a = potential.coeff_map().clone();
    let group = bundle.group.clone();
    let omega = SmoothMap::new(k + n * n, d * (k + d), move |p| {
        let coeffs = a.eval_jets(&p[..k]);
        let g = unvec(&p[k..], n);
        let g_inv = if twist {
            inverse(&g).unwrap_or_else(|| DMatrix::from_element(n, n, Jet::constant(f64::NAN)))
        } else {
            DMatrix::identity(n, n)
        };
        let mut out = vec![Jet::constant(0.0); d * (k + d)];
        for i in 0..k {
            let ai = group.matrix_of(&coeffs[i * d..(i + 1) * d]);
            let col = if twist {
                group.coords_of_generic(&(&g_inv * ai * &g))
            } else {
                group.coords_of_generic(&ai)
            };
            out[i * d..(i + 1) * d].copy_from_slice(col.as_slice());
        }
        for j in 0..d {
            out[(k + j) * d + j] = Jet::constant(1.0);
        }
        out
    });
    ConnectionForm::new(bundle.clone(), omega)
}

impl ConnectionForm {
    pub fn new(bundle: PrincipalGroupoidBundle, omega: SmoothMap) -> Result<Self> {
        let (k, d, n) = (bundle.base.dim_obj, bundle.group.dim(), bundle.n());
        if omega.domain_dim() != k + n * n || omega.codomain_dim() != d * (k + d) {
            return Err(GeomError::DimensionMismatch {
                context: "connection form",
                expected: d * (k + d),
                actual: omega.codomain_dim(),
            });
        }
        Ok(Self { bundle, omega })
    }

    /// The Maurer–Cartan form `g^{-1} dg`.
    pub fn maurer_cartan(bundle: &PrincipalGroupoidBundle) -> Self {
        let k = bundle.base.dim_obj;
        twisted_potential(bundle, &DifferentialForm::zero(k, 1, bundle.group.dim()), true)
            .expect("zero potential has the right shape")
    }

    /// `g^{-1} dg + Ad_{g^{-1}} A` for an algebra-valued 1-form `A` on `X0`.
    pub fn gauge_potential(bundle: &PrincipalGroupoidBundle, a: &VectorValuedForm) -> Result<Self> {
        twisted_potential(bundle, a, true)
    }

    /// `g^{-1} dg + A` without the adjoint twist. Not equivariant unless `G`
    /// is abelian.
    pub fn untwisted(bundle: &PrincipalGroupoidBundle, a: &VectorValuedForm) -> Result<Self> {
        twisted_potential(bundle, a, false)
    }

    /// `t·self + (1 - t)·other`.
    pub fn affine(&self, t: f64, other: &ConnectionForm) -> Result<Self> {
        if self.omega.codomain_dim() != other.omega.codomain_dim() {
            return Err(GeomError::Precondition("connection forms on different bundles".into()));
        }
        let (a, b) = (self.omega.clone(), other.omega.clone());
        let omega = SmoothMap::new(a.domain_dim(), a.codomain_dim(), move |p| {
            a.eval_jets(p)
                .into_iter()
                .zip(b.eval_jets(p))
                .map(|(x, y)| x * t + y * (1.0 - t))
                .collect()
        });
        Self::new(self.bundle.clone(), omega)
    }

    pub fn omega_map(&self) -> &SmoothMap {
        &self.omega
    }

    /// `[Omega_x | Omega_eta]` at the point `(x, vec g)`.
    pub fn matrix_at(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let d = self.bundle.group.dim();
        let v = self.omega.eval(p)?;
        Ok(DMatrix::from_column_slice(d, self.bundle.total_dim(), v.as_slice()))
    }

    /// `omega_p(xdot, eta)`.
    pub fn apply(&self, p: &[f64], tangent: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.matrix_at(p)? * tangent)
    }

    /// The gauge potential `A = sigma* omega` along the identity section, as
    /// an algebra-valued 1-form on `X0`.
    pub fn gauge_potential_form(&self) -> VectorValuedForm {
        let (k, d, n) = (self.bundle.base.dim_obj, self.bundle.group.dim(), self.bundle.n());
        let omega = self.omega.clone();
        let id: Vec<f64> = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
        let coeff = SmoothMap::new(k, k * d, move |x| {
            let mut p = x.to_vec();
            p.extend(id.iter().map(|&v| Jet::constant(v)));
            omega.eval_jets(&p)[..k * d].to_vec()
        });
        DifferentialForm::new(k, 1, d, coeff).expect("potential has the right shape")
    }
}

/// Reproduction of fundamental fields and `R_h* omega = Ad_{h^{-1}} omega`.
pub fn check_connection_form(w: &ConnectionForm, n_samples: usize, seed: u64) -> Result<Residuals> {
    let b = &w.bundle;
    let (k, d) = (b.base.dim_obj, b.group.dim());
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    for _ in 0..n_samples {
        let x = b.base.sample_object(&mut rng);
        let g = b.sample_group_element(&mut rng);
        let h = b.sample_group_element(&mut rng);
        let p = b.point(x.as_slice(), &g);

        for j in 0..d {
            let mut xi = vec![0.0; d];
            xi[j] = 1.0;
            // differentiate t -> p·exp(t xi) at t = 0
            let tj = Jet::variable(0.0);
            let xi_jets: Vec<Jet> = xi.iter().map(|&c| tj * c).collect();
            let curve = g.map(Jet::constant) * expm(&b.group.matrix_of(&xi_jets));
            let jets: Vec<Jet> = x.iter().map(|&v| Jet::constant(v)).chain(curve.iter().copied()).collect();
            let (_, zeta) = b.read_tangent(&jets)?;
            let value = w.apply(&p, &zeta)?;
            r.record("reproduction", dist(value.as_slice(), &xi));
        }

        let ad_h_inv = b.group.adjoint_matrix(&h.clone().try_inverse().ok_or_else(|| {
            GeomError::Precondition("group element is not invertible".into())
        })?)?;
        let ph = b.point(x.as_slice(), &(&g * &h));
        let base_value = w.matrix_at(&p)?;
        for a in 0..k + d {
            let mut tangent = vec![0.0; k + d];
            tangent[a] = 1.0;
            // push (xdot, eta) through right multiplication by h
            let jets = b.tangent_jets(x.as_slice(), &g, &tangent[..k], &tangent[k..]);
            let hj = h.map(Jet::constant);
            let moved_g = unvec(&jets[k..], b.n()) * hj;
            let moved: Vec<Jet> = jets[..k].iter().copied().chain(moved_g.iter().copied()).collect();
            let (_, pushed) = b.read_tangent(&moved)?;
            let lhs = w.apply(&ph, &pushed)?;
            let rhs = &ad_h_inv * base_value.column(a);
            r.record("equivariance", dist(lhs.as_slice(), rhs.as_slice()));
        }
    }
    Ok(r)
}

/// `|s^* omega - t^* omega|` on `s*E = X1 × G`, where `s^(gamma, g) = (s gamma, g)`
/// and `t^(gamma, g) = gamma·(s gamma, g)`.
pub fn check_groupoid_compatibility(
    w: &ConnectionForm,
    n_samples: usize,
    seed: u64,
) -> Result<Residuals> {
    let b = &w.bundle;
    let g = &b.base;
    let (n1, d) = (g.dim_arr, b.group.dim());
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    r.record("compatibility", 0.0);
    for _ in 0..n_samples {
        let gamma = g.sample_arrow(&mut rng);
        let gm = b.sample_group_element(&mut rng);
        for a in 0..n1 + d {
            let mut tangent = vec![0.0; n1 + d];
            tangent[a] = 1.0;
            let dg = &gm * b.group.matrix_of(&tangent[n1..]);
            let gamma_j: Vec<Jet> = gamma
                .iter()
                .zip(&tangent[..n1])
                .map(|(&v, &e)| Jet::new(v, e))
                .collect();
            let g_j: Vec<Jet> = gm.iter().zip(dg.iter()).map(|(&v, &e)| Jet::new(v, e)).collect();

            let mut src = g.s.eval_jets(&gamma_j);
            src.extend_from_slice(&g_j);
            let (ps, vs) = b.read_tangent(&src)?;
            let tgt = b.action.eval_jets(&concat_jets(&gamma_j, &g_j));
            let (pt, vt) = b.read_tangent(&tgt)?;
            let diff = w.apply(&ps, &vs)? - w.apply(&pt, &vt)?;
            r.record("compatibility", diff.norm());
        }
    }
    Ok(r)
}

fn concat_jets(a: &[Jet], b: &[Jet]) -> Vec<Jet> {
    a.iter().chain(b).copied().collect()
}

/// A splitting `D` of the Atiyah sequence in the trivialisation
/// `At(E) = TX0 ⊕ g`: `x -> (dim X0 + d) × dim X0` matrix, column-major.
#[derive(Clone, Debug)]
pub struct AtiyahSplitting {
    pub bundle: PrincipalGroupoidBundle,
    d_map: SmoothMap,
}

impl AtiyahSplitting {
    pub fn new(bundle: PrincipalGroupoidBundle, d_map: SmoothMap) -> Result<Self> {
        let (k, d) = (bundle.base.dim_obj, bundle.group.dim());
        if d_map.domain_dim() != k || d_map.codomain_dim() != (k + d) * k {
            return Err(GeomError::DimensionMismatch {
                context: "Atiyah splitting",
                expected: (k + d) * k,
                actual: d_map.codomain_dim(),
            });
        }
        Ok(Self { bundle, d_map })
    }

    pub fn matrix_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.bundle.base.dim_obj;
        let v = self.d_map.eval(x)?;
        Ok(DMatrix::from_column_slice(k + self.bundle.group.dim(), k, v.as_slice()))
    }

    /// `(d alpha)' ∘ D`: the `TX0` block of `D`.
    pub fn anchor_composite(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.bundle.base.dim_obj;
        Ok(self.matrix_at(x)?.rows(0, k).into_owned())
    }
}

/// `D(v) = (v, -Omega_eta^{-1} Omega_x v)` at the identity section.
pub fn split_from_form(w: &ConnectionForm) -> AtiyahSplitting {
    let b = w.bundle.clone();
    let (k, d, n) = (b.base.dim_obj, b.group.dim(), b.n());
    let omega = w.omega.clone();
    let id: Vec<f64> = DMatrix::<f64>::identity(n, n).as_slice().to_vec();
    let d_map = SmoothMap::new(k, (k + d) * k, move |x| {
        let mut p = x.to_vec();
        p.extend(id.iter().map(|&v| Jet::constant(v)));
        let om = DMatrix::from_column_slice(d, k + d, &omega.eval_jets(&p));
        let om_x = om.columns(0, k).into_owned();
        let om_eta = om.columns(k, d).into_owned();
        let lift = crate::smooth::solve(&om_eta, &om_x)
            .unwrap_or_else(|| DMatrix::from_element(d, k, Jet::constant(f64::NAN)));
        let mut out = DMatrix::from_element(k + d, k, Jet::constant(0.0));
        for i in 0..k {
            out[(i, i)] = Jet::constant(1.0);
            for a in 0..d {
                out[(k + a, i)] = -lift[(a, i)];
            }
        }
        out.as_slice().to_vec()
    });
    AtiyahSplitting::new(b, d_map).expect("splitting has the right shape")
}

/// `Omega(x, g) = [-Ad_{g^{-1}} D_g(x) | I]`.
pub fn form_from_split(split: &AtiyahSplitting) -> ConnectionForm {
    let b = split.bundle.clone();
    let (k, d) = (b.base.dim_obj, b.group.dim());
    let d_map = split.d_map.clone();
    let potential = DifferentialForm::new(
        k,
        1,
        d,
        SmoothMap::new(k, k * d, move |x| {
            let dm = d_map.eval_jets(x);
            let mut out = Vec::with_capacity(k * d);
            for i in 0..k {
                for a in 0..d {
                    out.push(-dm[i * (k + d) + k + a]);
                }
            }
            out
        }),
    )
    .expect("potential has the right shape");
    ConnectionForm::gauge_potential(&b, &potential).expect("potential matches the bundle")
}

/// Both splitting round trips and `(d alpha)' ∘ D = I`.
pub fn check_atiyah_roundtrip(w: &ConnectionForm, n_samples: usize, seed: u64) -> Result<Residuals> {
    let b = &w.bundle;
    let k = b.base.dim_obj;
    let split = split_from_form(w);
    let back = form_from_split(&split);
    let split_again = split_from_form(&back);
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    for _ in 0..n_samples {
        let x = b.base.sample_object(&mut rng);
        let g = b.sample_group_element(&mut rng);
        let p = b.point(x.as_slice(), &g);
        r.record(
            "form_roundtrip",
            (back.matrix_at(&p)? - w.matrix_at(&p)?).amax(),
        );
        r.record(
            "split_roundtrip",
            (split_again.matrix_at(x.as_slice())? - split.matrix_at(x.as_slice())?).amax(),
        );
        r.record(
            "anchor",
            (split.anchor_composite(x.as_slice())? - DMatrix::identity(k, k)).amax(),
        );
    }
    Ok(r)
}

/// `F_ij = d_i A_j - d_j A_i + [A_i, A_j]` from the gauge potential.
pub fn curvature(w: &ConnectionForm) -> VectorValuedForm {
    let (k, d) = (w.bundle.base.dim_obj, w.bundle.group.dim());
    if k < 2 {
        return DifferentialForm::zero(k, 2.min(k), d);
    }
    let a = w.gauge_potential_form();
    let group = w.bundle.group.clone();
    let pairs = index_tuples(k, 2);
    let len = pairs.len() * d;
    let coeff = SmoothMap::from_real(k, len, move |x| {
        let run = || -> Result<Vec<f64>> {
            let jac = jacobian(a.coeff_map(), x)?;
            let av = a.coeff_map().eval(x)?;
            let mut out = vec![0.0; len];
            for (row, t) in pairs.iter().enumerate() {
                let (i, j) = (t[0], t[1]);
                let br = group.bracket(&av.as_slice()[i * d..(i + 1) * d], &av.as_slice()[j * d..(j + 1) * d]);
                for c in 0..d {
                    out[row * d + c] = jac[(j * d + c, i)] - jac[(i * d + c, j)] + br[c];
                }
            }
            Ok(out)
        };
        run().unwrap_or_else(|_| vec![f64::NAN; len])
    });
    DifferentialForm::new(k, 2, d, coeff).expect("curvature has the right shape")
}

/// Horizontal lift of `e_i` as a vector field on the chart `(x, xi) -> (x, exp xi)`.
fn horizontal_field(w: &ConnectionForm, i: usize) -> VectorField {
    let b = &w.bundle;
    let (k, d) = (b.base.dim_obj, b.group.dim());
    let group = b.group.clone();
    let omega = w.omega.clone();
    let constants = group.structure_constants();
    let map = SmoothMap::new(k + d, k + d, move |q| {
        let xi = &q[k..];
        let g = expm(&group.matrix_of(xi));
        let mut p = q[..k].to_vec();
        p.extend(g.iter().copied());
        let om = DMatrix::from_column_slice(d, k + d, &omega.eval_jets(&p));
        let om_eta = om.columns(k, d).into_owned();
        let rhs = -om.column(i).into_owned();
        let eta = crate::smooth::solve(&om_eta, &DMatrix::from_column_slice(d, 1, rhs.as_slice()));
        // left-trivialised eta -> chart velocity: solve phi(xi) v = eta with
        // phi(xi) = sum_m (-ad_xi)^m / (m+1)!
        let ad = DMatrix::from_fn(d, d, |r, c| {
            (0..d).fold(Jet::constant(0.0), |acc, a| acc + xi[a] * constants[r][(a, c)])
        });
        let mut term = DMatrix::<Jet>::identity(d, d);
        let mut phi = term.clone();
        for m in 1..=20 {
            term = (&term * &ad).map(|v| -v / (m as f64 + 1.0));
            phi += &term;
        }
        let mut out = vec![Jet::constant(0.0); k + d];
        out[i] = Jet::constant(1.0);
        match eta.and_then(|e| crate::smooth::solve(&phi, &e)) {
            Some(v) => out[k..].copy_from_slice(v.as_slice()),
            None => out[k..].fill(Jet::constant(f64::NAN)),
        }
        out
    });
    VectorField::new(map).expect("lift field is square")
}

/// Curvature from the bracket of horizontal lifts: `F(e_i, e_j) = -omega([V_i, V_j])`
/// at the identity section.
pub fn curvature_oracle(w: &ConnectionForm, x: &[f64]) -> Result<DMatrix<f64>> {
    let b = &w.bundle;
    let (k, d, n) = (b.base.dim_obj, b.group.dim(), b.n());
    let fields: Vec<VectorField> = (0..k).map(|i| horizontal_field(w, i)).collect();
    let q = concat(x, &vec![0.0; d]);
    let p = b.point(x, &DMatrix::identity(n, n));
    let pairs = index_tuples(k, 2);
    let mut out = DMatrix::zeros(pairs.len(), d);
    for (row, t) in pairs.iter().enumerate() {
        let br = lie_bracket(&fields[t[0]], &fields[t[1]], &q)?;
        // at xi = 0 the chart velocity equals eta
        let val = -w.apply(&p, &br)?;
        out.set_row(row, &val.transpose());
    }
    Ok(out)
}

/// Max `|F|` and the vertical part of brackets of horizontal lifts at
/// sampled points of `E` (away from the identity section).
pub fn check_flat(w: &ConnectionForm, n_samples: usize, seed: u64) -> Result<Residuals> {
    let b = &w.bundle;
    let (k, d) = (b.base.dim_obj, b.group.dim());
    let f = curvature(w);
    let fields: Vec<VectorField> = (0..k).map(|i| horizontal_field(w, i)).collect();
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    r.record("curvature", 0.0);
    r.record("horizontal_involutivity", 0.0);
    for _ in 0..n_samples {
        let x = b.base.sample_object(&mut rng);
        r.record("curvature", f.coefficients(x.as_slice())?.amax());
        let xi = sampling::uniform_box(&mut rng, d, -0.5, 0.5);
        let q = concat(x.as_slice(), xi.as_slice());
        let p = b.point(x.as_slice(), &b.group.exp(xi.as_slice()));
        for (i, j) in (0..k).tuple_combinations() {
            let br = lie_bracket(&fields[i], &fields[j], &q)?;
            // vertical part: bracket velocity converted to eta by phi(xi)
            let ad = b.group.ad_matrix(xi.as_slice());
            let mut term = DMatrix::<f64>::identity(d, d);
            let mut phi = term.clone();
            for m in 1..=20 {
                term = (&term * &ad) * (-1.0 / (m as f64 + 1.0));
                phi += &term;
            }
            let mut tangent = br.clone();
            let eta = &phi * br.rows(k, d);
            tangent.rows_mut(k, d).copy_from(&eta);
            r.record("horizontal_involutivity", w.apply(&p, &tangent)?.norm());
        }
    }
    Ok(r)
}

/// Structure-equation curvature against the bracket oracle.
pub fn check_curvature_two_route(
    w: &ConnectionForm,
    n_samples: usize,
    seed: u64,
) -> Result<Residuals> {
    let f = curvature(w);
    let mut rng = sampling::rng(seed);
    let mut r = Residuals::new();
    r.record("two_route", 0.0);
    if w.bundle.base.dim_obj < 2 {
        return Ok(r);
    }
    for _ in 0..n_samples {
        let x = w.bundle.base.sample_object(&mut rng);
        let structure = f.coefficients(x.as_slice())?;
        let oracle = curvature_oracle(w, x.as_slice())?;
        r.record("two_route", (structure - oracle).amax());
    }
    Ok(r)
}

/// `nu(F ∧ ... ∧ F)` as a `2k`-form on `X0`.
#[derive(Clone, Debug)]
pub struct ChernWeilForm {
    pub form: DifferentialForm,
    /// Set when `2k > dim X0`; the form is then zero of degree `dim X0`.
    pub degree_overflow: bool,
}

pub fn chern_weil(w: &ConnectionForm, nu: &InvariantPolynomial) -> Result<ChernWeilForm> {
    let k0 = w.bundle.base.dim_obj;
    let deg = nu.degree();
    if 2 * deg > k0 {
        return Ok(ChernWeilForm {
            form: DifferentialForm::zero(k0, k0, 1),
            degree_overflow: true,
        });
    }
    let f = curvature(w);
    let group = w.bundle.group.clone();
    let nu = nu.clone();
    let pairs = index_tuples(k0, 2);
    let targets = index_tuples(k0, 2 * deg);
    // For each output tuple: ordered sequences of disjoint increasing pairs
    // covering it, with the sign of the resulting permutation.
    let plan: Vec<Vec<(f64, Vec<usize>)>> = targets
        .iter()
        .map(|t| {
            let mut terms = Vec::new();
            for perm in (0..2 * deg).permutations(2 * deg) {
                if !(0..deg).all(|a| perm[2 * a] < perm[2 * a + 1]) {
                    continue;
                }
                let inversions = (0..perm.len())
                    .tuple_combinations()
                    .filter(|&(a, b)| perm[a] > perm[b])
                    .count();
                let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
                let idx: Vec<usize> = (0..deg)
                    .map(|a| {
                        let pair = [t[perm[2 * a]], t[perm[2 * a + 1]]];
                        pairs.iter().position(|p| p[..] == pair[..]).expect("pair of the tuple")
                    })
                    .collect();
                terms.push((sign, idx));
            }
            terms
        })
        .collect();
    let len = targets.len();
    let coeff = SmoothMap::from_real(k0, len, move |x| {
        let run = || -> Result<Vec<f64>> {
            let fc = f.coefficients(x)?;
            let mats: Vec<DMatrix<f64>> = (0..fc.nrows())
                .map(|r| group.matrix_of(&fc.row(r).iter().copied().collect::<Vec<_>>()))
                .collect();
            let mut out = vec![0.0; len];
            for (o, terms) in plan.iter().enumerate() {
                for (sign, idx) in terms {
                    let args: Vec<DMatrix<f64>> = idx.iter().map(|&i| mats[i].clone()).collect();
                    out[o] += sign * nu.eval_matrices(&group, &args)?;
                }
            }
            Ok(out)
        };
        run().unwrap_or_else(|_| vec![f64::NAN; len])
    });
    Ok(ChernWeilForm {
        form: DifferentialForm::new(k0, 2 * deg, 1, coeff)?,
        degree_overflow: false,
    })
}

/// Base change of a bundle and connection form along a groupoid morphism:
/// `gamma~·(x, g) = (t gamma~, pr_G gamma·(phi0 x, g))` with
/// `gamma = phi1(gamma~)`, and `omega~ = (phi0 × id)* omega`.
pub fn pullback_bundle(
    phi: &GroupoidMorphism,
    b: &PrincipalGroupoidBundle,
    w: &ConnectionForm,
) -> Result<(PrincipalGroupoidBundle, ConnectionForm)> {
    let src = phi.source.clone();
    let (n1, k, ky) = (src.dim_arr, src.dim_obj, phi.target.dim_obj);
    let (nn, d) = (b.n() * b.n(), b.group.dim());
    if b.base.dim_arr != phi.target.dim_arr || b.base.dim_obj != ky {
        return Err(GeomError::DimensionMismatch {
            context: "bundle base versus morphism target",
            expected: ky,
            actual: b.base.dim_obj,
        });
    }
    let (t, phi1, mu) = (src.t.clone(), phi.phi1.clone(), b.action.clone());
    let action = SmoothMap::new(n1 + nn, k + nn, move |p| {
        let mut q = phi1.eval_jets(&p[..n1]);
        q.extend_from_slice(&p[n1..]);
        let moved = mu.eval_jets(&q);
        let mut out = t.eval_jets(&p[..n1]);
        out.extend_from_slice(&moved[ky..]);
        out
    });
    let bundle = PrincipalGroupoidBundle::new(src, b.group.clone(), action)?;

    let (phi0, omega) = (phi.phi0.clone(), w.omega.clone());
    let omega_new = SmoothMap::from_real(k + nn, d * (k + d), move |p| {
        let run = || -> Result<Vec<f64>> {
            let x = &p[..k];
            let dphi = jacobian(&phi0, x)?;
            let mut q = phi0.eval(x)?.as_slice().to_vec();
            q.extend_from_slice(&p[k..]);
            let om = DMatrix::from_column_slice(d, ky + d, omega.eval(&q)?.as_slice());
            let mut out = DMatrix::zeros(d, k + d);
            out.columns_mut(0, k).copy_from(&(om.columns(0, ky) * dphi));
            out.columns_mut(k, d).copy_from(&om.columns(ky, d));
            Ok(out.as_slice().to_vec())
        };
        run().unwrap_or_else(|_| vec![f64::NAN; d * (k + d)])
    });
    let form = ConnectionForm::new(bundle.clone(), omega_new)?;
    Ok((bundle, form))
}
