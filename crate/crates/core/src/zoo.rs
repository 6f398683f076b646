//! Named, analytically understood examples with expected check outcomes.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::connection::GroupoidConnection;
use crate::error::{GeomError, Result};
use crate::forms::DifferentialForm;
use crate::groupoid::{GroupoidMorphism, LieGroupoid, Sampler};
use crate::liegroup::{InvariantPolynomial, MatrixLieGroup};
use crate::principal::{ConnectionForm, PrincipalGroupoidBundle};
use crate::sampling::{self, Rng};
use crate::smooth::{Jet, Real, SmoothMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
}

/// Expected outcome of one named check, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expectation {
    pub check: String,
    pub outcome: Outcome,
    pub rationale: &'static str,
}

fn pass(check: &str, rationale: &'static str) -> Expectation {
    Expectation {
        check: check.to_string(),
        outcome: Outcome::Pass,
        rationale,
    }
}

fn fail(check: &str, rationale: &'static str) -> Expectation {
    Expectation {
        check: check.to_string(),
        outcome: Outcome::Fail,
        rationale,
    }
}

#[derive(Clone, Debug)]
pub struct LabeledForm {
    pub label: String,
    pub form: DifferentialForm,
}

#[derive(Clone, Debug)]
pub struct LabeledMorphism {
    pub label: String,
    pub morphism: GroupoidMorphism,
}

#[derive(Clone, Debug)]
pub struct LabeledPolynomial {
    pub label: String,
    pub poly: InvariantPolynomial,
}

/// A groupoid with optional connection, bundle, forms and morphisms, and
/// the table of checks to run on it.
#[derive(Clone, Debug)]
pub struct NamedExample {
    pub name: &'static str,
    pub description: &'static str,
    pub groupoid: LieGroupoid,
    pub connection: Option<GroupoidConnection>,
    pub bundle: Option<PrincipalGroupoidBundle>,
    pub connection_form: Option<ConnectionForm>,
    /// Forms on the object space.
    pub forms: Vec<LabeledForm>,
    /// Morphisms into or out of this groupoid, checked as morphisms and
    /// possibly as Morita maps.
    pub morphisms: Vec<LabeledMorphism>,
    /// A morphism into this groupoid along which the connection and bundle
    /// are pulled back.
    pub cover: Option<GroupoidMorphism>,
    pub chern_weil: Vec<LabeledPolynomial>,
    pub expected: Vec<Expectation>,
}

impl NamedExample {
    fn new(name: &'static str, description: &'static str, groupoid: LieGroupoid) -> Self {
        Self {
            name,
            description,
            groupoid,
            connection: None,
            bundle: None,
            connection_form: None,
            forms: Vec::new(),
            morphisms: Vec::new(),
            cover: None,
            chern_weil: Vec::new(),
            expected: Vec::new(),
        }
    }

    pub fn expectation(&self, check: &str) -> Option<&Expectation> {
        self.expected.iter().find(|e| e.check == check)
    }

    pub fn form(&self, label: &str) -> Option<&DifferentialForm> {
        self.forms.iter().find(|f| f.label == label).map(|f| &f.form)
    }

    fn with_form(mut self, label: &str, form: DifferentialForm) -> Self {
        self.forms.push(LabeledForm {
            label: label.to_string(),
            form,
        });
        self
    }

    fn expect(mut self, e: Vec<Expectation>) -> Self {
        self.expected.extend(e);
        self
    }
}

/// The structural checks every groupoid passes.
fn groupoid_checks() -> Vec<Expectation> {
    vec![
        pass("ad_jacobian", "forward-mode Jacobians agree with central differences"),
        pass("groupoid_axioms", "structure maps satisfy the groupoid identities"),
        pass("source_submersion", "ds has full rank with smallest singular value at least 0.1"),
    ]
}

/// The connection checks for a multiplicative flat connection.
fn good_connection_checks() -> Vec<Expectation> {
    vec![
        pass("unit_axiom", "the unit section is tangent to the distribution"),
        pass("composition_axiom", "transport maps compose along arrows"),
        pass("obstruction_dt", "dt of the obstruction vanishes when transport composes"),
        pass("obstruction_functor", "horizontal lifting is a functor into the tangent groupoid"),
        pass("integrability", "the distribution is involutive"),
        pass("transport_groupoid", "both axioms hold, so TX0 becomes a groupoid vector bundle"),
        pass("theta_iso", "theta is an isomorphism between the s* and t* groupoids"),
    ]
}

fn bundle_checks() -> Vec<Expectation> {
    vec![
        pass("bundle_action", "the action covers t, is unital, associative and G-equivariant"),
        pass("connection_form", "reproduces fundamental fields and is Ad-equivariant"),
        pass("atiyah_roundtrip", "form and splitting determine each other"),
        pass("curvature_two_route", "structure equation agrees with the bracket of horizontal lifts"),
    ]
}

fn box_sampler(n: usize, lo: f64, hi: f64) -> impl Fn(&mut Rng) -> DVector<f64> + Send + Sync {
    move |rng| sampling::uniform_box(rng, n, lo, hi)
}

fn rotate<T: Real>(phi: T, x: T, y: T) -> [T; 2] {
    let (c, s) = (phi.cos(), phi.sin());
    [c * x - s * y, s * x + c * y]
}

fn zero() -> Jet {
    Jet::constant(0.0)
}

/// `[pt => pt]`, used as a Morita target.
fn point_groupoid() -> LieGroupoid {
    let empty = || SmoothMap::new(0, 0, |_| Vec::new());
    LieGroupoid::new(
        0,
        0,
        empty(),
        empty(),
        empty(),
        empty(),
        empty(),
        Sampler::new(|_| DVector::zeros(0), |_, _| DVector::zeros(0)),
    )
    .expect("point groupoid")
}

/// Pair groupoid `[R^n × R^n => R^n]`, arrow `(a, b)` from `b` to `a`.
pub fn pair_base(n: usize) -> LieGroupoid {
    LieGroupoid::new(
        n,
        2 * n,
        SmoothMap::new(2 * n, n, move |p| p[n..].to_vec()),
        SmoothMap::new(2 * n, n, move |p| p[..n].to_vec()),
        SmoothMap::new(4 * n, 2 * n, move |p| {
            let mut out = p[..n].to_vec();
            out.extend_from_slice(&p[3 * n..]);
            out
        }),
        SmoothMap::new(n, 2 * n, |p| [p, p].concat()),
        SmoothMap::new(2 * n, 2 * n, move |p| [&p[n..], &p[..n]].concat()),
        Sampler::new(box_sampler(n, -1.5, 1.5), move |b, rng| {
            let a = sampling::uniform_box(rng, n, -1.5, 1.5);
            DVector::from_iterator(2 * n, a.iter().copied().chain(b.iter().copied()))
        }),
    )
    .expect("pair groupoid")
}

/// `SO(2) ⋉ R^2` with arrows `(phi, x)` from `x` to `R_phi x`.
pub fn action_base() -> LieGroupoid {
    LieGroupoid::new(
        2,
        3,
        SmoothMap::new(3, 2, |p| p[1..].to_vec()),
        SmoothMap::new(3, 2, |p| rotate(p[0], p[1], p[2]).to_vec()),
        SmoothMap::new(6, 3, |p| vec![p[0] + p[3], p[4], p[5]]),
        SmoothMap::new(2, 3, |p| vec![zero(), p[0], p[1]]),
        SmoothMap::new(3, 3, |p| {
            let r = rotate(p[0], p[1], p[2]);
            vec![-p[0], r[0], r[1]]
        }),
        Sampler::new(
            |rng| {
                let r = sampling::uniform(rng, 0.5, 1.5);
                let a = sampling::uniform(rng, -PI, PI);
                DVector::from_vec(vec![r * a.cos(), r * a.sin()])
            },
            |x, rng| DVector::from_vec(vec![sampling::uniform(rng, -PI, PI), x[0], x[1]]),
        ),
    )
    .expect("action groupoid")
}

fn coordinate_frame_on_x(base: LieGroupoid) -> GroupoidConnection {
    let frame = DMatrix::from_column_slice(3, 2, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    GroupoidConnection::constant(base, frame).expect("coordinate frame")
}

fn rotation_invariant_form() -> DifferentialForm {
    DifferentialForm::scalar(2, 1, |x| vec![-x[1], x[0]]).expect("1-form on R^2")
}

fn potential(k: usize, d: usize, f: fn(&[Jet]) -> Vec<Jet>) -> DifferentialForm {
    DifferentialForm::new(k, 1, d, SmoothMap::new(k, k * d, f)).expect("potential shape")
}

/// `-(x1 dx2 - x2 dx1)/|x|^2 · J`: invariant under rotations and equal to
/// `-1` on the rotation generator, as a rotating action requires.
fn angular_potential() -> DifferentialForm {
    potential(2, 1, |x| {
        let r2 = x[0] * x[0] + x[1] * x[1];
        vec![x[1] / r2, -x[0] / r2]
    })
}

fn rotating_bundle(base: LieGroupoid) -> PrincipalGroupoidBundle {
    // gamma·(x, g) = (R_phi x, R_phi g)
    let action = SmoothMap::new(3 + 4, 2 + 4, |p| {
        let x = rotate(p[0], p[1], p[2]);
        let (c, s) = (p[0].cos(), p[0].sin());
        let g = &p[3..];
        // column-major 2×2: [g00, g10, g01, g11]
        vec![
            x[0],
            x[1],
            c * g[0] - s * g[1],
            s * g[0] + c * g[1],
            c * g[2] - s * g[3],
            s * g[2] + c * g[3],
        ]
    });
    PrincipalGroupoidBundle::new(base, MatrixLieGroup::so2(), action).expect("rotating bundle")
}

fn rotating_action_groupoid(name: &'static str, description: &'static str) -> (NamedExample, PrincipalGroupoidBundle) {
    let g = action_base();
    let ex = NamedExample::new(name, description, g.clone());
    (ex, rotating_bundle(g))
}

/// `[R^n => R^n]` with `H = TX`.
pub fn unit_groupoid(n: usize) -> NamedExample {
    let g = LieGroupoid::unit(n, -1.0, 1.0);
    let c = GroupoidConnection::constant(g.clone(), DMatrix::identity(n, n)).expect("identity frame");
    let to_point = GroupoidMorphism::new(
        g.clone(),
        point_groupoid(),
        SmoothMap::new(n, 0, |_| Vec::new()),
        SmoothMap::new(n, 0, |_| Vec::new()),
    )
    .expect("map to the point");
    let mut ex = NamedExample::new(
        "unit_groupoid",
        "unit groupoid of R^2; ker ds = 0, so H = TX is the unique and integrable connection",
        g,
    );
    ex.connection = Some(c);
    ex.morphisms.push(LabeledMorphism {
        label: "to_point".into(),
        morphism: to_point,
    });
    ex.with_form(
        "sin(x1)dx2",
        DifferentialForm::scalar(n, 1, move |x| {
            let mut v = vec![zero(); n];
            v[n - 1] = x[0].sin();
            v
        })
        .expect("1-form"),
    )
    .expect(groupoid_checks())
    .expect(good_connection_checks())
    .expect(vec![
        pass("groupoid_form[sin(x1)dx2]", "s = t, so every form is a groupoid form"),
        pass("dclosure[sin(x1)dx2]", "s = t, so every form is a groupoid form"),
        pass("morphism[to_point]", "the constant map is a groupoid morphism"),
        fail(
            "morita[to_point]",
            "dim X1 = 2 but the Cartesian square needs 0 + 2·2 - 0 = 4",
        ),
    ])
}

/// `Z/2 ⋉ R` by reflection. Arrow coordinate `a` codes the identity arrow
/// at `x = a` for `a < 50` and the reflection at `x = a - 100` otherwise.
pub fn etale_example() -> NamedExample {
    fn flip(a: Jet) -> bool {
        a.re > 50.0
    }
    let s = SmoothMap::new(1, 1, |p| vec![if flip(p[0]) { p[0] - 100.0 } else { p[0] }]);
    let t = SmoothMap::new(1, 1, |p| vec![if flip(p[0]) { 100.0 - p[0] } else { p[0] }]);
    let m = SmoothMap::new(2, 1, |p| {
        let (z, y) = (p[0], p[1]);
        let x = if flip(y) { y - 100.0 } else { y };
        vec![if flip(z) != flip(y) { x + 100.0 } else { x }]
    });
    let e = SmoothMap::new(1, 1, |p| vec![p[0]]);
    let i = SmoothMap::new(1, 1, |p| vec![if flip(p[0]) { 200.0 - p[0] } else { p[0] }]);
    let sampler = Sampler::new(box_sampler(1, -2.0, 2.0), |x, rng| {
        let reflect = sampling::uniform(rng, 0.0, 1.0) < 0.5;
        DVector::from_vec(vec![if reflect { x[0] + 100.0 } else { x[0] }])
    });
    let g = LieGroupoid::new(1, 1, s, t, m, e, i, sampler).expect("etale groupoid");
    let c = GroupoidConnection::constant(g.clone(), DMatrix::identity(1, 1)).expect("full frame");

    let bundle = PrincipalGroupoidBundle::trivial_action(g.clone(), MatrixLieGroup::scaling());
    let w = ConnectionForm::gauge_potential(&bundle, &potential(1, 1, |x| vec![x[0]]))
        .expect("x dx potential");

    let mut ex = NamedExample::new(
        "etale_example",
        "reflection groupoid Z/2 ⋉ R: ds is invertible, so H = TX1 is the induced flat connection; R+ bundle with x dx potential",
        g,
    );
    ex.connection = Some(c);
    ex.bundle = Some(bundle);
    ex.connection_form = Some(w);
    ex.with_form("x_dx", DifferentialForm::scalar(1, 1, |x| vec![x[0]]).expect("x dx"))
        .with_form("dx", DifferentialForm::coordinate(1, 0))
        .expect(groupoid_checks())
        .expect(good_connection_checks())
        .expect(bundle_checks())
        .expect(vec![
            pass("groupoid_form[x_dx]", "x dx is invariant under x -> -x"),
            fail("groupoid_form[dx]", "dx changes sign under the reflection"),
            pass("compatibility", "the potential x dx is reflection invariant"),
            pass("flatness", "one-dimensional base: curvature vanishes"),
        ])
}

fn pair_example(
    name: &'static str,
    description: &'static str,
    frame: fn(&[Jet]) -> Vec<Jet>,
) -> NamedExample {
    let g = pair_base(1);
    let c = GroupoidConnection::new(g.clone(), SmoothMap::new(2, 2, frame)).expect("frame");
    let mut ex = NamedExample::new(name, description, g);
    ex.connection = Some(c);
    ex
}

/// Pair groupoid of `R` with the diagonal connection.
pub fn pair_groupoid(n: usize) -> NamedExample {
    assert_eq!(n, 1, "the shipped pair-groupoid fixture lives on R");
    let mut ex = pair_example(
        "pair_groupoid",
        "pair groupoid of R with the diagonal connection H = {(v, v)}; trivial SO(2) bundle with the Maurer-Cartan form",
        |_| vec![Jet::constant(1.0), Jet::constant(1.0)],
    );
    let bundle = PrincipalGroupoidBundle::trivial_action(ex.groupoid.clone(), MatrixLieGroup::so2());
    ex.connection_form = Some(ConnectionForm::maurer_cartan(&bundle));
    ex.bundle = Some(bundle);

    // pair(R^2) -> pair(R), first coordinate
    let big = pair_base(2);
    let cover = GroupoidMorphism::new(
        big,
        ex.groupoid.clone(),
        SmoothMap::new(2, 1, |p| vec![p[0]]),
        SmoothMap::new(4, 2, |p| vec![p[0], p[2]]),
    )
    .expect("projection");
    ex.morphisms.push(LabeledMorphism {
        label: "cover".into(),
        morphism: cover.clone(),
    });
    ex.cover = Some(cover);
    ex.with_form("dx", DifferentialForm::coordinate(1, 0))
        .with_form("x_dx", DifferentialForm::scalar(1, 1, |x| vec![x[0]]).expect("x dx"))
        .expect(groupoid_checks())
        .expect(good_connection_checks())
        .expect(bundle_checks())
        .expect(vec![
            pass("groupoid_form[dx]", "translation-invariant coefficient"),
            fail("groupoid_form[x_dx]", "the coefficient differs at the two ends of an arrow"),
            pass("compatibility", "trivial action and Maurer-Cartan form"),
            pass("flatness", "Maurer-Cartan form is flat"),
            pass("morphism[cover]", "projection pair(R^2) -> pair(R) commutes with all structure maps"),
            pass("morita[cover]", "surjective submersion on objects with a Cartesian square"),
            pass("pullback_unit_axiom", "pullback along a Morita map keeps the unit axiom"),
            pass("pullback_composition_axiom", "pullback along a Morita map keeps multiplicativity"),
            pass("pullback_obstruction_functor", "pulled back lifts stay functorial"),
            pass("pullback_bundle_action", "base change of a bundle is a bundle"),
            pass("pullback_connection_form", "pullback of a connection form is a connection form"),
            pass("pullback_compatibility", "pullback of a compatible connection is compatible"),
        ])
}

pub fn pair_groupoid_perturbed() -> NamedExample {
    pair_example(
        "pair_groupoid_perturbed",
        "pair groupoid of R with the non-multiplicative frame (b^2 + 1, 1); expected to violate both axioms",
        |p| vec![p[1] * p[1] + 1.0, Jet::constant(1.0)],
    )
    .expect(groupoid_checks())
    .expect(vec![
        fail("unit_axiom", "at e(x) = (x, x) the frame (x^2 + 1, 1) is not diagonal"),
        fail("composition_axiom", "theta_(a,b) = b^2 + 1 is not multiplicative"),
        fail("obstruction_dt", "dt K = (theta_zy - theta_z theta_y) v is nonzero"),
        fail("obstruction_functor", "horizontal lifts do not compose"),
        pass("integrability", "a line field is always involutive"),
        fail("transport_groupoid", "the transported groupoid is not associative on vectors"),
        fail("theta_iso", "theta is not compatible with composition"),
    ])
}

pub fn pair_groupoid_curl() -> NamedExample {
    let g = pair_base(2);
    // columns: d/db1 + b2 d/da1, d/db2 in coordinates (a1, a2, b1, b2)
    let frame = SmoothMap::new(4, 8, |p| {
        let (o, l) = (Jet::constant(0.0), Jet::constant(1.0));
        vec![p[3], o, l, o, o, o, o, l]
    });
    let c = GroupoidConnection::new(g.clone(), frame).expect("curl frame");
    let mut ex = NamedExample::new(
        "pair_groupoid_curl",
        "pair groupoid of R^2 with the frame {d/db1 + b2 d/da1, d/db2}; the bracket leaves the distribution",
        g,
    );
    ex.connection = Some(c);
    ex.expect(groupoid_checks()).expect(vec![
        fail("unit_axiom", "the frame is not tangent to the diagonal"),
        fail("composition_axiom", "theta_(a,b) = diag(b2, 0) is not multiplicative"),
        fail("obstruction_dt", "theta does not compose"),
        fail("obstruction_functor", "theta does not compose"),
        fail("integrability", "[u1, u2] = -d/da1 has a component 1/sqrt(1 + b2^2) off H"),
        fail("transport_groupoid", "theta does not compose"),
        fail("theta_iso", "theta = diag(b2, 0) is singular"),
    ])
}

/// `SO(2) ⋉ R^2` with the coordinate connection, the rotating `SO(2)`
/// bundle and the angular connection form.
pub fn action_groupoid() -> NamedExample {
    let (mut ex, bundle) = rotating_action_groupoid(
        "action_groupoid",
        "transformation groupoid SO(2) ⋉ R^2 (annulus) with the coordinate connection, the rotating SO(2) bundle and the invariant angular connection",
    );
    ex.connection = Some(coordinate_frame_on_x(ex.groupoid.clone()));
    let w = ConnectionForm::gauge_potential(&bundle, &angular_potential()).expect("angular form");
    ex.bundle = Some(bundle);
    ex.connection_form = Some(w);

    // the squaring map z -> z^2 is étale away from 0 and doubles angles
    let cover = GroupoidMorphism::new(
        action_base(),
        ex.groupoid.clone(),
        SmoothMap::new(2, 2, |z| vec![z[0] * z[0] - z[1] * z[1], z[0] * z[1] * 2.0]),
        SmoothMap::new(3, 3, |p| {
            vec![p[0] * 2.0, p[1] * p[1] - p[2] * p[2], p[1] * p[2] * 2.0]
        }),
    )
    .expect("squaring cover");
    ex.morphisms.push(LabeledMorphism {
        label: "cover".into(),
        morphism: cover.clone(),
    });
    ex.cover = Some(cover);

    let to_units = GroupoidMorphism::new(
        ex.groupoid.clone(),
        LieGroupoid::unit(2, -1.0, 1.0),
        SmoothMap::identity(2),
        SmoothMap::new(3, 2, |p| p[1..].to_vec()),
    )
    .expect("projection");
    ex.morphisms.push(LabeledMorphism {
        label: "projection_to_units".into(),
        morphism: to_units,
    });
    ex.chern_weil.push(LabeledPolynomial {
        label: "pairing_J".into(),
        poly: InvariantPolynomial::Pairing { element: vec![1.0] },
    });

    ex.with_form("x1dx2-x2dx1", rotation_invariant_form())
        .with_form("dx1", DifferentialForm::coordinate(2, 0))
        .expect(groupoid_checks())
        .expect(good_connection_checks())
        .expect(bundle_checks())
        .expect(vec![
            pass("groupoid_form[x1dx2-x2dx1]", "rotation-invariant 1-form"),
            pass("dclosure[x1dx2-x2dx1]", "d of an invariant form, 2 dx1^dx2, is invariant"),
            fail("groupoid_form[dx1]", "dx1 is not rotation invariant"),
            pass("dclosure[dx1]", "d(dx1) = 0"),
            pass("compatibility", "the angular potential is invariant and cancels the rotation of the fibre"),
            pass("flatness", "the angular potential is closed"),
            pass("chern_weil_closed[pairing_J]", "curvature vanishes"),
            pass("chern_weil_groupoid_form[pairing_J]", "curvature vanishes"),
            pass("morphism[cover]", "squaring commutes with rotation after doubling the angle"),
            pass("morita[cover]", "local diffeomorphism on objects with a Cartesian square of arrows"),
            fail("morphism[projection_to_units]", "(phi, x) -> x does not commute with the target map"),
            fail("morita[projection_to_units]", "dim X1 = 3 but the Cartesian square needs 2 + 4 - 4 = 2"),
            pass("pullback_unit_axiom", "étale pullback of the coordinate connection is the coordinate connection"),
            pass("pullback_composition_axiom", "étale pullback keeps multiplicativity"),
            pass("pullback_obstruction_functor", "pulled back lifts stay functorial"),
            pass("pullback_bundle_action", "base change of a bundle is a bundle"),
            pass("pullback_connection_form", "pullback of a connection form is a connection form"),
            pass("pullback_compatibility", "pullback of a compatible connection is compatible"),
        ])
}

pub fn action_groupoid_mc() -> NamedExample {
    let (mut ex, bundle) = rotating_action_groupoid(
        "action_groupoid_mc",
        "rotating SO(2) bundle over SO(2) ⋉ R^2 with the Maurer-Cartan form: invariant but it does not vanish on the rotation of the fibre",
    );
    ex.connection_form = Some(ConnectionForm::maurer_cartan(&bundle));
    ex.bundle = Some(bundle);
    ex.expect(groupoid_checks()).expect(bundle_checks()).expect(vec![
        fail("compatibility", "t^*omega - s^*omega = dphi on s*E"),
        pass("flatness", "Maurer-Cartan form is flat"),
    ])
}

pub fn action_groupoid_trivial_lift() -> NamedExample {
    let g = action_base();
    let bundle = PrincipalGroupoidBundle::trivial_action(g.clone(), MatrixLieGroup::so2());
    let mut ex = NamedExample::new(
        "action_groupoid_trivial_lift",
        "SO(2) ⋉ R^2 acting on R^2 × SO(2) through the base only; the Maurer-Cartan form is compatible",
        g,
    );
    ex.connection_form = Some(ConnectionForm::maurer_cartan(&bundle));
    ex.bundle = Some(bundle);
    ex.expect(groupoid_checks())
        .expect(bundle_checks()).expect(vec![
        pass("compatibility", "fibre coordinates are untouched by the action"),
        pass("flatness", "Maurer-Cartan form is flat"),
    ])
}

pub fn action_groupoid_noninvariant() -> NamedExample {
    let g = action_base();
    let bundle = PrincipalGroupoidBundle::trivial_action(g.clone(), MatrixLieGroup::so2());
    let w = ConnectionForm::gauge_potential(&bundle, &potential(2, 1, |x| vec![zero(), x[0]]))
        .expect("x1 dx2 potential");
    let mut ex = NamedExample::new(
        "action_groupoid_noninvariant",
        "SO(2) ⋉ R^2 with the potential x1 dx2 J, which is not rotation invariant",
        g,
    );
    ex.connection_form = Some(w);
    ex.bundle = Some(bundle);
    ex.expect(groupoid_checks()).expect(bundle_checks()).expect(vec![
        fail("compatibility", "x1 dx2 changes under rotation"),
        fail("flatness", "F = J dx1^dx2"),
    ])
}

pub fn action_groupoid_so3_broken() -> NamedExample {
    let g = action_base();
    let so3 = MatrixLieGroup::so3();
    let l3 = so3.basis()[2].clone();
    // gamma·(x, g) = (R_phi x, g exp(phi L3))
    let action = SmoothMap::new(3 + 9, 2 + 9, move |p| {
        let x = rotate(p[0], p[1], p[2]);
        let g = DMatrix::from_column_slice(3, 3, &p[3..]);
        let r = crate::liegroup::expm(&l3.map(|v| p[0] * v));
        let mut out = x.to_vec();
        out.extend((g * r).iter().copied());
        out
    });
    let bundle = PrincipalGroupoidBundle::new(g.clone(), so3, action).expect("so3 action");
    let mut ex = NamedExample::new(
        "action_groupoid_so3_broken",
        "SO(2) ⋉ R^2 acting on R^2 × SO(3) by right multiplication with exp(phi L3): not G-equivariant",
        g,
    );
    ex.bundle = Some(bundle);
    ex.expect(groupoid_checks()).expect(vec![fail(
        "bundle_action",
        "right multiplication does not commute with the right principal action for nonabelian G",
    )])
}

pub fn action_groupoid_so2_broken() -> NamedExample {
    let g = action_base();
    // gamma·(x, g) = (R_phi x, g R_phi)
    let action = SmoothMap::new(3 + 4, 2 + 4, |p| {
        let x = rotate(p[0], p[1], p[2]);
        let (c, s) = (p[0].cos(), p[0].sin());
        let g = &p[3..];
        // g · R: columns of g combined
        vec![
            x[0],
            x[1],
            g[0] * c + g[2] * s,
            g[1] * c + g[3] * s,
            -g[0] * s + g[2] * c,
            -g[1] * s + g[3] * c,
        ]
    });
    let bundle = PrincipalGroupoidBundle::new(g.clone(), MatrixLieGroup::so2(), action).expect("action");
    let mut ex = NamedExample::new(
        "action_groupoid_so2_broken",
        "the same right-multiplication action for abelian SO(2): it commutes with the principal action",
        g,
    );
    ex.bundle = Some(bundle);
    ex.expect(groupoid_checks()).expect(vec![pass(
        "bundle_action",
        "SO(2) is abelian, so left and right multiplication agree",
    )])
}

fn vector_bundle_base(base_dim: usize) -> LieGroupoid {
    let k = base_dim;
    LieGroupoid::new(
        k,
        k + 1,
        SmoothMap::new(k + 1, k, move |p| p[..k].to_vec()),
        SmoothMap::new(k + 1, k, move |p| p[..k].to_vec()),
        SmoothMap::new(2 * (k + 1), k + 1, move |p| {
            let mut out = p[k + 1..2 * k + 1].to_vec();
            out.push(p[k] + p[2 * k + 1]);
            out
        }),
        SmoothMap::new(k, k + 1, move |p| {
            let mut out = p.to_vec();
            out.push(zero());
            out
        }),
        SmoothMap::new(k + 1, k + 1, move |p| {
            let mut out = p[..k].to_vec();
            out.push(-p[k]);
            out
        }),
        Sampler::new(box_sampler(k, -1.0, 1.0), |x, rng| {
            let mut v = x.to_vec();
            v.push(sampling::uniform(rng, -2.0, 2.0));
            DVector::from_vec(v)
        }),
    )
    .expect("vector bundle groupoid")
}

/// Frame `(e_i, -Gamma_i(x) v)` of a linear connection on a line bundle
/// over `R^2`.
fn vector_bundle_connection(g: LieGroupoid, gamma: fn(&[Jet]) -> [Jet; 2]) -> GroupoidConnection {
    let frame = SmoothMap::new(3, 6, move |p| {
        let gm = gamma(&p[..2]);
        let (o, l) = (zero(), Jet::constant(1.0));
        vec![l, o, -gm[0] * p[2], o, l, -gm[1] * p[2]]
    });
    GroupoidConnection::new(g, frame).expect("linear connection frame")
}

pub fn vector_bundle_groupoid(rank: usize, base_dim: usize) -> NamedExample {
    assert_eq!((rank, base_dim), (1, 2), "the shipped fixture is a line bundle over R^2");
    let g = vector_bundle_base(base_dim);
    let c = vector_bundle_connection(g.clone(), |_| [zero(), zero()]);
    let bundle = PrincipalGroupoidBundle::trivial_action(g.clone(), MatrixLieGroup::so2());
    let w = ConnectionForm::gauge_potential(&bundle, &potential(2, 1, |x| vec![zero(), x[0]]))
        .expect("x1 dx2 potential");
    let mut ex = NamedExample::new(
        "vector_bundle_groupoid",
        "line bundle R^2 × R as a groupoid under fibrewise addition, flat linear connection; SO(2) bundle with potential x1 dx2 J",
        g,
    );
    ex.connection = Some(c);
    ex.bundle = Some(bundle);
    ex.connection_form = Some(w);
    for (label, poly) in [
        ("pairing_J", InvariantPolynomial::Pairing { element: vec![1.0] }),
        ("trace1", InvariantPolynomial::trace(1)),
    ] {
        ex.chern_weil.push(LabeledPolynomial {
            label: label.into(),
            poly,
        });
    }
    ex.with_form(
        "x1dx2",
        DifferentialForm::scalar(2, 1, |x| vec![zero(), x[0]]).expect("1-form"),
    )
    .expect(groupoid_checks())
    .expect(good_connection_checks())
    .expect(bundle_checks())
    .expect(vec![
        pass("groupoid_form[x1dx2]", "s = t"),
        pass("dclosure[x1dx2]", "s = t"),
        pass("compatibility", "s^ = t^ on s*E"),
        fail("flatness", "F = J dx1^dx2"),
        pass("chern_weil_closed[pairing_J]", "nu(F) = dx1^dx2 has constant coefficient"),
        pass("chern_weil_groupoid_form[pairing_J]", "s = t"),
        pass("chern_weil_closed[trace1]", "so(2) is traceless, nu(F) = 0"),
        pass("chern_weil_groupoid_form[trace1]", "nu(F) = 0"),
    ])
}

pub fn vector_bundle_groupoid_curved() -> NamedExample {
    let g = vector_bundle_base(2);
    let c = vector_bundle_connection(g.clone(), |x| [zero(), x[0]]);
    let mut ex = NamedExample::new(
        "vector_bundle_groupoid_curved",
        "line bundle groupoid over R^2 with Gamma = x1 dx2; linear curvature dx1^dx2 makes the distribution non-involutive",
        g,
    );
    ex.connection = Some(c);
    ex.expect(groupoid_checks()).expect(vec![
        pass("unit_axiom", "the frame is (e_i, 0) on the zero section"),
        pass("composition_axiom", "theta is the identity"),
        pass("obstruction_dt", "theta composes"),
        pass("obstruction_functor", "lifts are linear in the fibre coordinate"),
        fail("integrability", "[u1, u2] = -v d/dv is vertical"),
        pass("transport_groupoid", "both axioms hold"),
        pass("theta_iso", "theta is the identity"),
    ])
}

/// Gauge groupoid of `R^2 × SO(2)` in the slice `[(x, e^{i theta}), (y, 1)]`,
/// arrow `(x, theta, y)` from `y` to `x`.
fn gauge_base() -> LieGroupoid {
    LieGroupoid::new(
        2,
        5,
        SmoothMap::new(5, 2, |p| p[3..].to_vec()),
        SmoothMap::new(5, 2, |p| p[..2].to_vec()),
        SmoothMap::new(10, 5, |p| vec![p[0], p[1], p[2] + p[7], p[8], p[9]]),
        SmoothMap::new(2, 5, |p| vec![p[0], p[1], zero(), p[0], p[1]]),
        SmoothMap::new(5, 5, |p| vec![p[3], p[4], -p[2], p[0], p[1]]),
        Sampler::new(box_sampler(2, -1.0, 1.0), |y, rng| {
            let x = sampling::uniform_box(rng, 2, -1.0, 1.0);
            DVector::from_vec(vec![x[0], x[1], sampling::uniform(rng, -PI, PI), y[0], y[1]])
        }),
    )
    .expect("gauge groupoid")
}

/// Horizontal lifts of `v` at both ends, pushed to the quotient:
/// `(v, (A(y) - A(x)) v, v)`.
fn gauge_connection(a: fn(&[Jet]) -> [Jet; 2]) -> GroupoidConnection {
    let frame = SmoothMap::new(5, 10, move |p| {
        let ax = a(&p[..2]);
        let ay = a(&p[3..]);
        let (o, l) = (zero(), Jet::constant(1.0));
        vec![l, o, ay[0] - ax[0], l, o, o, l, ay[1] - ax[1], o, l]
    });
    GroupoidConnection::new(gauge_base(), frame).expect("gauge frame")
}

pub fn gauge_groupoid() -> NamedExample {
    // A = (x2 dx1 + x1 dx2) J is exact
    let c = gauge_connection(|x| [x[1], x[0]]);
    let mut ex = NamedExample::new(
        "gauge_groupoid",
        "gauge groupoid of R^2 × SO(2) with the connection induced by the flat potential d(x1 x2) J",
        c.base.clone(),
    );
    ex.connection = Some(c);
    ex.expect(groupoid_checks()).expect(good_connection_checks())
}

pub fn gauge_groupoid_curved() -> NamedExample {
    let c = gauge_connection(|x| [zero(), x[0] * x[0]]);
    let mut ex = NamedExample::new(
        "gauge_groupoid_curved",
        "gauge groupoid of R^2 × SO(2) with the induced connection of x1^2 dx2 J, whose curvature 2 x1 is not constant",
        c.base.clone(),
    );
    ex.connection = Some(c);
    let mut checks = good_connection_checks();
    checks.retain(|e| e.check != "integrability");
    ex.expect(groupoid_checks()).expect(checks).expect(vec![fail(
        "integrability",
        "brackets of lifts pick up F(y) - F(x) along theta",
    )])
}

fn so3_potential() -> DifferentialForm {
    // x1 dx2 xi1 + x2 dx1 xi2 + x3 dx4 xi3 + sin(x1) dx3 xi2
    potential(4, 3, |x| {
        let o = zero();
        vec![
            o, x[1], o, // dx1
            x[0], o, o, // dx2
            o, x[0].sin(), o, // dx3
            o, o, x[2], // dx4
        ]
    })
}

/// Trivial `SO(3)` bundle over the unit groupoid of `R^n`.
pub fn principal_over_unit(n: usize) -> NamedExample {
    assert_eq!(n, 4, "the shipped fixture lives on R^4");
    let g = LieGroupoid::unit(n, -1.0, 1.0);
    let c = GroupoidConnection::constant(g.clone(), DMatrix::identity(n, n)).expect("identity frame");
    let bundle = PrincipalGroupoidBundle::trivial_action(g.clone(), MatrixLieGroup::so3());
    let w = ConnectionForm::gauge_potential(&bundle, &so3_potential()).expect("potential");
    let mut ex = NamedExample::new(
        "principal_over_unit",
        "trivial SO(3) bundle over the unit groupoid of R^4: groupoid connections are ordinary connections",
        g,
    );
    ex.connection = Some(c);
    ex.bundle = Some(bundle);
    ex.connection_form = Some(w);
    for k in [1, 2] {
        ex.chern_weil.push(LabeledPolynomial {
            label: format!("trace{k}"),
            poly: InvariantPolynomial::trace(k),
        });
    }
    ex.expect(groupoid_checks())
        .expect(good_connection_checks())
        .expect(bundle_checks())
        .expect(vec![
        pass("compatibility", "s^ = t^"),
        fail("flatness", "the potential has nonzero curvature"),
        pass("chern_weil_closed[trace1]", "closed 2-form"),
        pass("chern_weil_groupoid_form[trace1]", "s = t"),
        pass("chern_weil_closed[trace2]", "closed 4-form"),
        pass("chern_weil_groupoid_form[trace2]", "s = t"),
    ])
}

pub fn principal_over_unit_untwisted() -> NamedExample {
    let g = LieGroupoid::unit(4, -1.0, 1.0);
    let bundle = PrincipalGroupoidBundle::trivial_action(g.clone(), MatrixLieGroup::so3());
    let w = ConnectionForm::untwisted(&bundle, &so3_potential()).expect("potential");
    let mut ex = NamedExample::new(
        "principal_over_unit_untwisted",
        "the same SO(3) potential added without the Ad twist: not equivariant",
        g,
    );
    ex.bundle = Some(bundle);
    ex.connection_form = Some(w);
    ex.expect(groupoid_checks()).expect(vec![
        pass("bundle_action", "trivial action"),
        fail("connection_form", "R_h^* omega differs from Ad_{h^-1} omega"),
        pass("compatibility", "s^ = t^ on the unit groupoid"),
        fail("atiyah_roundtrip", "the splitting only sees the form at g = I, so the rebuilt form is the twisted one"),
        fail(
            "curvature_two_route",
            "the bracket oracle differentiates the form off g = I, where it is not equivariant",
        ),
        fail("flatness", "the potential has nonzero curvature"),
    ])
}

type Builder = fn() -> NamedExample;

const BUILDERS: &[(&str, Builder)] = &[
    ("action_groupoid", action_groupoid),
    ("action_groupoid_mc", action_groupoid_mc),
    ("action_groupoid_noninvariant", action_groupoid_noninvariant),
    ("action_groupoid_so2_broken", action_groupoid_so2_broken),
    ("action_groupoid_so3_broken", action_groupoid_so3_broken),
    ("action_groupoid_trivial_lift", action_groupoid_trivial_lift),
    ("etale_example", etale_example),
    ("gauge_groupoid", gauge_groupoid),
    ("gauge_groupoid_curved", gauge_groupoid_curved),
    ("pair_groupoid", || pair_groupoid(1)),
    ("pair_groupoid_curl", pair_groupoid_curl),
    ("pair_groupoid_perturbed", pair_groupoid_perturbed),
    ("principal_over_unit", || principal_over_unit(4)),
    ("principal_over_unit_untwisted", principal_over_unit_untwisted),
    ("unit_groupoid", || unit_groupoid(2)),
    ("vector_bundle_groupoid", || vector_bundle_groupoid(1, 2)),
    ("vector_bundle_groupoid_curved", vector_bundle_groupoid_curved),
];

/// Names of all shipped examples, alphabetically.
pub fn example_names() -> Vec<&'static str> {
    BUILDERS.iter().map(|(n, _)| *n).collect()
}

pub fn example(name: &str) -> Result<NamedExample> {
    BUILDERS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, b)| b())
        .ok_or_else(|| GeomError::Config(format!("unknown example '{name}'")))
}

pub fn all_examples() -> Vec<NamedExample> {
    BUILDERS.iter().map(|(_, b)| b()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_sorted_and_unique() {
        let names = example_names();
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(names, sorted);
    }

    #[test]
    fn builders_agree_with_their_names() {
        for ex in all_examples() {
            assert!(example_names().contains(&ex.name), "{}", ex.name);
            assert_eq!(example(ex.name).unwrap().name, ex.name);
        }
        assert!(example("nope").is_err());
    }
}
