use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use gflow_bench::bump_state;
use gflow_core::flow::{rhs_deturck, rhs_direct, step, Background, FlowParams, Gauge, StepControl};
use gflow_core::geometry::CurvatureBundle;
use gflow_core::grid_fields::MetricField;

fn bench_curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("curvature_bundle");
    for (dim, n) in [(2, 64), (2, 128), (3, 24)] {
        let s = bump_state(dim, n);
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &s, |b, s| {
            b.iter(|| CurvatureBundle::new(&s.g).unwrap())
        });
    }
    group.finish();
}

fn bench_rhs(c: &mut Criterion) {
    let params = FlowParams::new(1.0, 0.5, 1.0, 0.2);
    let mut group = c.benchmark_group("rhs");
    for n in [64, 128] {
        let s = bump_state(2, n);
        let bg = Background::new(MetricField::flat(*s.g.grid())).unwrap();
        group.bench_with_input(BenchmarkId::new("direct", n), &s, |b, s| b.iter(|| rhs_direct(s, &params).unwrap()));
        group.bench_with_input(BenchmarkId::new("deturck", n), &s, |b, s| {
            b.iter(|| rhs_deturck(s, &bg, &params).unwrap())
        });
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let s = bump_state(2, 64);
    let params = FlowParams::list();
    let ctl = StepControl::from_cfl(&s.g, StepControl::DEFAULT_SAFETY);
    c.bench_function("rk4_step_2d_64", |b| b.iter(|| step(&s, &params, &ctl, &Gauge::Direct).unwrap()));
}

criterion_group!(benches, bench_curvature, bench_rhs, bench_step);
criterion_main!(benches);
