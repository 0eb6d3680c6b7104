//! Per-sample cost of the pipeline stages on built-in curves.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ddvv_core::expr::{eval_jet, EvalOptions};
use ddvv_core::transforms::apply_map;
use ddvv_core::{
    builtin, canonical_frame, ddvv_residual, fundamental_forms, parse, phi_jets, AmbientMap, ChartPoint, Tolerances,
};
use num_complex::Complex64;

fn point(n: usize) -> ChartPoint {
    ChartPoint { u: 0.3, v: -0.2, theta: (0..n - 2).map(|k| 0.4 + 0.3 * k as f64).collect() }
}

fn expressions(c: &mut Criterion) {
    let text = "cos(z)^2*exp(i*z)/(1 + z^2) - log(2 + z)*sinh(z)";
    c.bench_function("parse", |b| b.iter(|| parse(black_box(text)).unwrap()));
    let e = parse(text).unwrap();
    let z0 = Complex64::new(0.3, -0.2);
    let opts = EvalOptions::default();
    let mut group = c.benchmark_group("eval_jet");
    for order in [1, 3] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, &k| {
            b.iter(|| eval_jet(black_box(&e), z0, k, &opts).unwrap())
        });
    }
    group.finish();
}

fn construction(c: &mut Criterion) {
    let tol = Tolerances::default();
    let mut jets = c.benchmark_group("phi_jets");
    for name in ["enneper-pair", "null-exp", "null-exp-4"] {
        let curve = builtin(name).unwrap();
        let p = point(curve.n());
        jets.bench_function(name, |b| b.iter(|| phi_jets(&curve, black_box(&p), &tol).unwrap()));
    }
    jets.finish();

    let curve = builtin("enneper-pair").unwrap();
    let pj = phi_jets(&curve, &point(curve.n()), &tol).unwrap();
    c.bench_function("fundamental_forms", |b| b.iter(|| fundamental_forms(black_box(&pj.phi), &tol).unwrap()));
    let sd = fundamental_forms(&pj.phi, &tol).unwrap();
    c.bench_function("ddvv_residual", |b| b.iter(|| ddvv_residual(black_box(&sd), 0.0, &tol)));
    c.bench_function("canonical_frame", |b| b.iter(|| canonical_frame(black_box(&sd), &tol).unwrap()));

    let map = AmbientMap::euclidean_inversion(vec![0.0; pj.phi.dim()], 1.0).unwrap();
    c.bench_function("apply_map/euclidean_inversion", |b| b.iter(|| apply_map(&map, black_box(&pj.phi)).unwrap()));
}

criterion_group!(benches, expressions, construction);
criterion_main!(benches);
