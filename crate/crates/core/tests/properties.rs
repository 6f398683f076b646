//! Algebraic and analytic invariants as property tests.

use liegroupoid::connection::theta;
use liegroupoid::forms::{exterior_derivative, pullback, wedge, DifferentialForm};
use liegroupoid::groupoid::{check_groupoid_axioms, dm_compose};
use liegroupoid::liegroup::{InvariantPolynomial, MatrixLieGroup};
use liegroupoid::principal::{check_connection_form, ConnectionForm};
use liegroupoid::residual::Residuals;
use liegroupoid::sampling::{self, derive_seed};
use liegroupoid::smooth::{jacobian, jacobian_fd, subspace_equal, Jet, Real, SmoothMap, SubspaceBasis};
use liegroupoid::zoo;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn coords(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

/// A fixed nonlinear map `R^3 -> R^2`.
fn sample_map() -> SmoothMap {
    SmoothMap::new(3, 2, |p| {
        vec![p[0].sin() * p[1] + p[2].exp(), (p[0] * p[2]).cos() / (p[1] * p[1] + 1.5)]
    })
}

/// A fixed nonlinear map `R^2 -> R^3`.
fn inner_map() -> SmoothMap {
    SmoothMap::new(2, 3, |p| vec![p[0] * p[1], p[1].sin(), p[0] - p[1] * p[1]])
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn forward_mode_agrees_with_differences(p in coords(3)) {
        let f = sample_map();
        let j = jacobian(&f, &p).unwrap();
        let fd = jacobian_fd(&f, &p, 1e-6).unwrap();
        prop_assert!((j - fd).amax() < 1e-8);
    }

    #[test]
    fn chain_rule(p in coords(2)) {
        let (f, g) = (sample_map(), inner_map());
        let fg = f.compose(&g).unwrap();
        let q = g.eval(&p).unwrap();
        let lhs = jacobian(&fg, &p).unwrap();
        let rhs = jacobian(&f, q.as_slice()).unwrap() * jacobian(&g, &p).unwrap();
        prop_assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn subspace_distance_ignores_the_basis(b in coords(8), m in coords(4)) {
        let b = DMatrix::from_column_slice(4, 2, &b) + DMatrix::from_fn(4, 2, |r, c| if r == c { 3.0 } else { 0.0 });
        let m = DMatrix::from_column_slice(2, 2, &m) + DMatrix::identity(2, 2) * 3.0;
        let a = SubspaceBasis::new(b.clone()).unwrap();
        let c = SubspaceBasis::new(&b * m).unwrap();
        prop_assert!(subspace_equal(&a, &c).unwrap() < 1e-9);
    }

    #[test]
    fn dm_compose_is_linear(seed in any::<u64>(), w in coords(12), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        // composable tangents on SO(2) ⋉ R^2: w_z = (anything, dt w_y)
        let g = zoo::action_groupoid().groupoid;
        let mut rng = sampling::rng(seed);
        let (z, y) = g.sample_pair(&mut rng).unwrap();
        let dt = g.dt(y.as_slice()).unwrap();
        let tangent = |w: &[f64]| {
            let wy = DVector::from_column_slice(&w[..3]);
            let mut wz = DVector::zeros(3);
            wz[0] = w[3];
            wz.rows_mut(1, 2).copy_from(&(&dt * &wy));
            (wz, wy)
        };
        let (wz1, wy1) = tangent(&w[..6]);
        let (wz2, wy2) = tangent(&w[6..]);
        let dm = |wz: &DVector<f64>, wy: &DVector<f64>| {
            dm_compose(&g, z.as_slice(), wz.as_slice(), y.as_slice(), wy.as_slice()).unwrap()
        };
        let lhs = dm(&(&wz1 * a + &wz2 * b), &(&wy1 * a + &wy2 * b));
        let rhs = dm(&wz1, &wy1) * a + dm(&wz2, &wy2) * b;
        prop_assert!((lhs - rhs).amax() < 1e-8);
    }

    #[test]
    fn bracket_is_bilinear_antisymmetric_and_jacobi(x in coords(3), y in coords(3), z in coords(3), a in -2.0f64..2.0) {
        let g = MatrixLieGroup::so3();
        let br = |p: &[f64], q: &[f64]| g.bracket(p, q);
        prop_assert!((br(&x, &y) + br(&y, &x)).amax() < 1e-14);
        let ax_y: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let lin = br(&ax_y, &z) - (br(&x, &z) * a + br(&y, &z));
        prop_assert!(lin.amax() < 1e-13);
        let jac = br(&x, br(&y, &z).as_slice()) + br(&y, br(&z, &x).as_slice()) + br(&z, br(&x, &y).as_slice());
        prop_assert!(jac.amax() < 1e-13);
    }

    #[test]
    fn adjoint_is_an_algebra_automorphism(h in coords(3), x in coords(3), y in coords(3)) {
        let g = MatrixLieGroup::so3();
        let m = g.exp(&h);
        let ad = |v: &[f64]| g.adjoint(&m, v).unwrap();
        let lhs = ad(g.bracket(&x, &y).as_slice());
        let rhs = g.bracket(ad(&x).as_slice(), ad(&y).as_slice());
        prop_assert!((lhs - rhs).amax() < 1e-12);
        let back = g.exp(&h.iter().map(|v| -v).collect::<Vec<_>>());
        prop_assert!((m * back - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn trace_polynomials_are_symmetric_and_invariant(h in coords(3), x in coords(3), y in coords(3), z in coords(3)) {
        let g = MatrixLieGroup::so3();
        let m = g.exp(&h);
        let v = |c: &[f64]| DVector::from_column_slice(c);
        let ad = |c: &[f64]| g.adjoint(&m, c).unwrap();
        for k in [2usize, 3] {
            let nu = InvariantPolynomial::trace(k);
            let args: Vec<DVector<f64>> = [&x, &y, &z][..k].iter().map(|c| v(c)).collect();
            let mut swapped = args.clone();
            swapped.swap(0, 1);
            let moved: Vec<DVector<f64>> = [&x, &y, &z][..k].iter().map(|c| ad(c)).collect();
            let base = nu.eval(&g, &args).unwrap();
            prop_assert!((base - nu.eval(&g, &swapped).unwrap()).abs() < 1e-12);
            prop_assert!((base - nu.eval(&g, &moved).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_forms_anticommute(p in coords(3)) {
        let a = DifferentialForm::scalar(3, 1, |x| vec![x[1], x[0] * x[2], Jet::constant(1.0)]).unwrap();
        let b = DifferentialForm::scalar(3, 1, |x| vec![x[2].sin(), Jet::constant(2.0), x[0]]).unwrap();
        let ab = wedge(&a, &b).unwrap().coefficients(&p).unwrap();
        let ba = wedge(&b, &a).unwrap().coefficients(&p).unwrap();
        prop_assert!((ab + ba).amax() < 1e-14);
    }

    #[test]
    fn d_squared_vanishes(p in coords(3)) {
        let f = DifferentialForm::scalar(3, 0, |x| vec![x[0].sin() * x[1] * x[2] + x[1].exp()]).unwrap();
        let ddf = exterior_derivative(&exterior_derivative(&f).unwrap()).unwrap();
        prop_assert!(ddf.coefficients(&p).unwrap().amax() < 1e-6);
        let w = DifferentialForm::scalar(3, 1, |x| vec![x[1] * x[2], x[0].cos(), x[0] * x[1]]).unwrap();
        let ddw = exterior_derivative(&exterior_derivative(&w).unwrap()).unwrap();
        prop_assert!(ddw.coefficients(&p).unwrap().amax() < 1e-5);
    }

    #[test]
    fn pullback_commutes_with_d(p in coords(2)) {
        let w = DifferentialForm::scalar(3, 1, |x| vec![x[1] * x[2], x[0].cos(), x[0] * x[1]]).unwrap();
        let f = inner_map();
        let lhs = exterior_derivative(&pullback(&f, &w).unwrap()).unwrap();
        let rhs = pullback(&f, &exterior_derivative(&w).unwrap()).unwrap();
        prop_assert!((lhs.coefficients(&p).unwrap() - rhs.coefficients(&p).unwrap()).amax() < 1e-6);
    }

    #[test]
    fn zoo_groupoid_axioms_hold_for_any_seed(seed in any::<u64>()) {
        for e in zoo::all_examples() {
            let r = check_groupoid_axioms(&e.groupoid, 3, seed).unwrap();
            prop_assert!(r.residuals.max() <= 1e-9, "{}: {}", e.name, r.residuals.max());
        }
    }

    #[test]
    fn flat_transport_is_multiplicative(seed in any::<u64>()) {
        for name in ["pair_groupoid", "action_groupoid", "gauge_groupoid", "vector_bundle_groupoid"] {
            let c = zoo::example(name).unwrap().connection.unwrap();
            let mut rng = sampling::rng(seed);
            let (z, y) = c.base.sample_pair(&mut rng).unwrap();
            let zy = c.base.compose(z.as_slice(), y.as_slice()).unwrap();
            let th = |a: &DVector<f64>| theta(&c, a.as_slice()).unwrap().theta;
            prop_assert!((th(&zy) - th(&z) * th(&y)).norm() < 1e-8);
        }
    }

    #[test]
    fn residuals_keep_the_maximum(values in prop::collection::vec(0.0f64..10.0, 1..20)) {
        let mut r = Residuals::new();
        for v in &values {
            r.record("x", *v);
        }
        let max = values.iter().copied().fold(0.0, f64::max);
        prop_assert_eq!(r.max(), max);
        r.record("x", f64::NAN);
        prop_assert!(r.max().is_nan());
    }

    #[test]
    fn derived_seeds_depend_on_every_input(run in any::<u64>()) {
        let a = derive_seed(run, "pair_groupoid", "unit_axiom");
        prop_assert_eq!(a, derive_seed(run, "pair_groupoid", "unit_axiom"));
        prop_assert_ne!(a, derive_seed(run, "pair_groupoid", "composition_axiom"));
        prop_assert_ne!(a, derive_seed(run, "pair_groupoi", "dunit_axiom"));
        prop_assert_ne!(a, derive_seed(run.wrapping_add(1), "pair_groupoid", "unit_axiom"));
    }
}

#[test]
fn connection_forms_form_an_affine_space() {
    let ex = zoo::principal_over_unit(4);
    let b = ex.bundle.unwrap();
    let w1 = ex.connection_form.unwrap();
    let w2 = ConnectionForm::maurer_cartan(&b);
    for t in [0.0, 0.25, 0.5, 1.0] {
        let w = w1.affine(t, &w2).unwrap();
        assert!(check_connection_form(&w, 30, 11).unwrap().max() <= 1e-9, "t = {t}");
    }
    // distinct endpoints, so the segment is not a single point
    let x = [0.2, -0.4, 0.6, 0.1];
    let diff = w1.gauge_potential_form().coefficients(&x).unwrap()
        - w2.gauge_potential_form().coefficients(&x).unwrap();
    assert!(diff.amax() > 0.0);
}

#[test]
fn real_trait_matches_f64_on_jets() {
    let x = Jet::variable(0.7);
    let y = (x.sin() * x.exp()).powi(2).sqrt();
    let re = (0.7f64.sin() * 0.7f64.exp()).abs();
    assert!((y.re - re).abs() < 1e-15);
    let h = 1e-6;
    let f = |t: f64| (t.sin() * t.exp()).powi(2).sqrt();
    assert!((y.eps - (f(0.7 + h) - f(0.7 - h)) / (2.0 * h)).abs() < 1e-8);
}
