use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grushin_bench::space;
use grushin_core::fields::{by_name, sample, LaplacianOf};
use grushin_core::frequency::{compute_profile, log_grid, ConsistentPotential, InverseQuartic, ProfileOptions};
use grushin_core::solver::{manufactured_problem, solve, BiradialOperator};
use grushin_core::{GridSpec, Method, QuadSettings, Quadrature, Weight};

fn ball_integral(c: &mut Criterion) {
    let sp = space(0.5);
    let u = by_name("gauss", 1.0).unwrap();
    let red = Quadrature::reduced(sp);
    let qmc = Quadrature::new(sp, Method::Qmc, QuadSettings { qmc_points: 1 << 16, ..QuadSettings::default() }).unwrap();
    let mut g = c.benchmark_group("ball_integral");
    for (name, q) in [("reduced2d", &red), ("qmc", &qmc)] {
        g.bench_function(name, |b| {
            b.iter(|| q.ball_integral(1.0, Weight::ONE, |n| Ok(sample(u.as_ref(), n, &sp, false)?.value)).unwrap())
        });
    }
    g.finish();
}

fn solver(c: &mut Criterion) {
    let sp = space(1.0);
    let v = Arc::new(InverseQuartic { c0: 1.0, eps: 0.1 });
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    for n in [65, 129] {
        let grid = GridSpec::new(1.0, 1.0, n, n).unwrap();
        g.bench_with_input(BenchmarkId::new("assemble", n), &grid, |b, grid| b.iter(|| BiradialOperator::assemble(*grid, &sp).unwrap()));
        let op = BiradialOperator::assemble(grid, &sp).unwrap();
        let spec = manufactured_problem(grid, v.clone());
        g.bench_with_input(BenchmarkId::new("solve", n), &spec, |b, spec| b.iter(|| solve(spec, &op).unwrap()));
    }
    g.finish();
}

fn profile(c: &mut Criterion) {
    let sp = space(1.0);
    let q = Quadrature::reduced(sp);
    let u = by_name("gauss", 2.0).unwrap();
    let w = LaplacianOf::new(u.clone());
    let v = ConsistentPotential { u: u.clone() };
    let radii = log_grid(0.5, 1.0, 16).unwrap();
    let mut g = c.benchmark_group("frequency");
    g.sample_size(10);
    g.bench_function("profile_gauss", |b| {
        b.iter(|| compute_profile(u.as_ref(), w.as_ref(), &v, &q, &radii, ProfileOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, ball_integral, solver, profile);
criterion_main!(benches);
