use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use korn::ansatz::{build_ansatz, AnsatzKind};
use korn::geometry::TorusSide;
use korn::kinematics::{default_grid, field_integrals, gradient_at};
use korn::solver::{assemble, min_rayleigh, ElementQuadrature};
use korn_bench::{basis, cylinder, torus};

fn gradient(c: &mut Criterion) {
    let shell = torus(TorusSide::Outer, 0.01);
    let kind = AnsatzKind::Regime1;
    let field = build_ansatz(&shell, kind, kind.default_shape()).unwrap();
    c.bench_function("gradient_at torus", |b| {
        b.iter(|| gradient_at(&shell, &field, black_box((0.004, 0.37, 0.11))).unwrap())
    });
}

fn integrals(c: &mut Criterion) {
    let shell = cylinder(2f64.powi(-8));
    let kind = AnsatzKind::DevelopableCase1;
    let field = build_ansatz(&shell, kind, kind.default_shape()).unwrap();
    let grid = default_grid(&shell, &field);
    c.bench_function("field_integrals cylinder", |b| b.iter(|| field_integrals(&shell, &field, black_box(&grid)).unwrap()));
}

fn assembly(c: &mut Criterion) {
    let shell = cylinder(1.0 / 16.0);
    let basis = basis(&shell, 16, 8);
    let quad = ElementQuadrature::for_basis(&basis);
    let mut group = c.benchmark_group("solver");
    group.sample_size(10);
    group.bench_function("assemble 16x8", |b| b.iter(|| assemble(&shell, black_box(&basis), quad).unwrap()));
    let forms = assemble(&shell, &basis, quad).unwrap();
    group.bench_function("band cholesky G", |b| b.iter(|| black_box(&forms.g).cholesky().unwrap()));
    group.bench_function("min_rayleigh 16x8", |b| b.iter(|| min_rayleigh(black_box(&forms), 1e-10, 2000, 1).unwrap()));
    group.finish();
}

criterion_group!(kernels, gradient, integrals, assembly);
criterion_main!(kernels);
