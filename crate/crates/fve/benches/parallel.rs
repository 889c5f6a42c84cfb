//! Compares the rayon element loop against the sequential fallback on the
//! hot paths: system assembly and the per-level error measurements.
//!
//! With default features the `assemble/par` entries use rayon; building the
//! bench with `--no-default-features` makes both entries sequential.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fve::analysis::{error_norms, superconv_error};
use fve::assembly::{assemble_fve, assemble_fve_seq, solve_problem};
use fve::expr::benchmark_problem;
use fve::linalg::SolveOptions;
use fve::mesh::TensorMesh;
use fve::quadrature::QuadratureSpec;
use std::sync::Arc;

fn bench_assembly(c: &mut Criterion) {
    let p = benchmark_problem();
    let quad = QuadratureSpec::default();
    let mut group = c.benchmark_group("assemble");
    for n in [32usize, 64] {
        let mesh = Arc::new(TensorMesh::unit_square(n));
        group.bench_with_input(BenchmarkId::new("seq", n), &n, |b, _| {
            b.iter(|| assemble_fve_seq(&mesh, &p, &quad).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("par", n), &n, |b, _| {
            b.iter(|| assemble_fve(&mesh, &p, &quad).unwrap())
        });
    }
    group.finish();
}

fn bench_error_measurement(c: &mut Criterion) {
    let p = benchmark_problem();
    let quad = QuadratureSpec::default();
    let n = 64usize;
    let mesh = Arc::new(TensorMesh::unit_square(n));
    let (u_h, _) = solve_problem(&mesh, &p, &quad, &SolveOptions::default()).unwrap();
    let s = mesh.stress_points();

    let mut group = c.benchmark_group("measure");
    group.bench_function(BenchmarkId::new("norms", n), |b| {
        b.iter(|| error_norms(&u_h, &p, &quad).unwrap())
    });
    group.bench_function(BenchmarkId::new("stress_points", n), |b| {
        b.iter(|| superconv_error(&u_h, &p, &s).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_error_measurement);
criterion_main!(benches);
