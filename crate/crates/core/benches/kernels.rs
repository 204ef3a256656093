//! Hot kernels on a single-thread pool versus the full pool.
//!
//! Build with `--no-default-features` to time the sequential fallback
//! instead; the two pools then coincide.

use std::f64::consts::PI;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use optmix::fem::{generate_mesh, FemBackend, MeshShape};
use optmix::stirring;
use optmix::{Backend, BoundaryCondition, DealiasRule, RectDomain, ScalarField, SpectralWorkspace};
use rayon::ThreadPoolBuilder;

fn theta(d: impl Into<optmix::Domain>) -> ScalarField {
    ScalarField::from_fn(d, |x, y| 0.5 * (PI * x).sin() + 0.25 * (2.0 * PI * y).sin())
}

fn pools() -> Vec<(usize, rayon::ThreadPool)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut sizes = vec![1];
    if all > 1 {
        sizes.push(all);
    }
    sizes
        .into_iter()
        .map(|n| (n, ThreadPoolBuilder::new().num_threads(n).build().unwrap()))
        .collect()
}

fn spectral(c: &mut Criterion) {
    let d = RectDomain::square(257, BoundaryCondition::NoFlux).unwrap();
    let t = theta(d);
    let mut g = c.benchmark_group("spectral-257");
    g.sample_size(10);
    for (n, pool) in pools() {
        let mut ws = SpectralWorkspace::new(d, DealiasRule::Half);
        g.bench_function(BenchmarkId::new("mix_norm", n), |b| {
            b.iter(|| pool.install(|| ws.mix_norm(&t).unwrap()))
        });
        g.bench_function(BenchmarkId::new("energy_flow", n), |b| {
            b.iter(|| pool.install(|| stirring::optimal_energy_flow(&mut ws, &t, 1.0).unwrap()))
        });
        let u = stirring::optimal_energy_flow(&mut ws, &t, 1.0).unwrap().u;
        g.bench_function(BenchmarkId::new("advance_0.01", n), |b| {
            b.iter(|| pool.install(|| ws.advance(&t, &u, 0.01, 0.5, 10_000).unwrap()))
        });
    }
    g.finish();
}

fn fem(c: &mut Criterion) {
    let mesh = Arc::new(generate_mesh(MeshShape::Circle, 2.0 / 64.0).unwrap());
    let t = theta(mesh.clone());
    let mut g = c.benchmark_group("fem-circle-64");
    g.sample_size(10);
    for (n, pool) in pools() {
        let mut fb = FemBackend::new(mesh.clone()).unwrap();
        g.bench_function(BenchmarkId::new("poisson", n), |b| {
            b.iter(|| pool.install(|| fb.poisson(&t).unwrap()))
        });
        let u = stirring::optimal_enstrophy_flow(&mut fb, &t, 15.0).unwrap().u;
        g.bench_function(BenchmarkId::new("advance_0.025", n), |b| {
            b.iter(|| pool.install(|| fb.advance(&t, &u, 0.025, 0.5, 10_000).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, spectral, fem);
criterion_main!(benches);
