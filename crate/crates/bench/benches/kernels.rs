use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use intflux::connection::{dual_value, optimal_connection};
use intflux::field::coulomb_superposition;
use intflux::flux::cube_flux;
use intflux::regularize::{gauge_fix_on, SurfaceMesh};
use intflux::{Cube, QuadratureSpec, Singularity, Vec3};
use intflux_bench::{random_instance, random_zero_total};
use std::hint::black_box;
use std::sync::Arc;

fn bench_cube_flux(c: &mut Criterion) {
    let field = coulomb_superposition(&[
        Singularity::new(Vec3::new(0.1, 0.0, 0.0), 1),
        Singularity::new(Vec3::new(-0.3, 0.2, 0.1), -2),
    ])
    .unwrap();
    let cube = Cube::new(Vec3::new(0.05, 0.02, -0.01), 0.4);
    let mut g = c.benchmark_group("cube_flux");
    for n_q in [8, 16, 32] {
        let quad = QuadratureSpec::gauss(n_q);
        g.bench_with_input(BenchmarkId::from_parameter(n_q), &quad, |b, q| {
            b.iter(|| cube_flux(&field, black_box(&cube), q).unwrap())
        });
    }
    g.finish();
}

fn bench_optimal_connection(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimal_connection");
    for n in [4, 8, 12] {
        let inst = random_instance(n, 7);
        g.bench_with_input(BenchmarkId::new("primal", n), &inst, |b, s| {
            b.iter(|| optimal_connection(black_box(s)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dual", n), &inst, |b, s| {
            b.iter(|| dual_value(black_box(s)).unwrap())
        });
    }
    g.finish();
}

fn bench_gauge_fix(c: &mut Criterion) {
    let cube = Cube::new(Vec3::ZERO, 0.25);
    let mut g = c.benchmark_group("gauge_fix");
    for n in [8, 16, 32] {
        let data = random_zero_total(cube, n, 3);
        let mesh = Arc::new(SurfaceMesh::new(n));
        g.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, d| {
            b.iter(|| gauge_fix_on(mesh.clone(), black_box(d), 1e-9, 1e-12).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_cube_flux, bench_optimal_connection, bench_gauge_fix);
criterion_main!(benches);
