use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use liegroupoid::connection::check_composition_axiom;
use liegroupoid::groupoid::check_groupoid_axioms;
use liegroupoid::principal::curvature;
use liegroupoid::smooth::jacobian;
use liegroupoid::suite::{self, RunConfig};
use liegroupoid::zoo;

fn structure_maps(c: &mut Criterion) {
    let g = zoo::action_groupoid().groupoid;
    c.bench_function("jacobian of m on the rotation groupoid", |b| {
        b.iter(|| jacobian(&g.m, black_box(&[0.3, 0.7, 0.2, -0.4, 1.1, 0.5])).unwrap())
    });
    c.bench_function("groupoid axioms, 100 samples", |b| {
        b.iter(|| check_groupoid_axioms(&g, 100, black_box(42)).unwrap())
    });
}

fn connections(c: &mut Criterion) {
    let conn = zoo::gauge_groupoid().connection.unwrap();
    c.bench_function("composition axiom on the gauge groupoid, 100 samples", |b| {
        b.iter(|| check_composition_axiom(&conn, 100, black_box(42)).unwrap())
    });
    let w = zoo::principal_over_unit(4).connection_form.unwrap();
    let f = curvature(&w);
    c.bench_function("so(3) curvature coefficients on R^4", |b| {
        b.iter(|| f.coefficients(black_box(&[0.3, -0.7, 0.45, 0.2])).unwrap())
    });
}

fn whole_example(c: &mut Criterion) {
    let cfg = RunConfig {
        examples: vec!["action_groupoid".into()],
        n_samples: 20,
        ..RunConfig::default()
    };
    let mut group = c.benchmark_group("suite");
    group.sample_size(10);
    group.bench_function("action_groupoid, 20 samples", |b| b.iter(|| suite::run(&cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, structure_maps, connections, whole_example);
criterion_main!(benches);
