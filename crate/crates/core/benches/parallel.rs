//! Rayon pool against a single-thread pool on the data-parallel kernels.
//! Build with `--no-default-features` to time the plain sequential loops.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraclog::dirichlet::{assemble, AssemblyRoute, Discretization};
use fraclog::domain::{DomainSpec, Grid};
use fraclog::energy::FormTables;
use fraclog::spectral::torus_spectrum;
use fraclog::OperatorParams;
use std::hint::black_box;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    vec![
        ("pool", rayon::ThreadPoolBuilder::new().build().unwrap()),
        (
            "single",
            rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap(),
        ),
    ]
}

fn bench(c: &mut Criterion) {
    let params = OperatorParams::new(2, 0.5).unwrap();
    let square = DomainSpec::square(-0.15, 0.15).unwrap();
    let grid = Grid::new(square, 16).unwrap();
    let line = DomainSpec::interval(-0.15, 0.15).unwrap();
    let p1 = OperatorParams::new(1, 0.5).unwrap();
    let disc = Discretization::new(&line, 256).unwrap();

    let mut g = c.benchmark_group("parallel");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(
            BenchmarkId::new("form_tables_2d", name),
            &pool,
            |b, pool| {
                b.iter(|| pool.install(|| FormTables::new(black_box(&grid), &params).unwrap()))
            },
        );
        g.bench_with_input(
            BenchmarkId::new("assemble_torus_1d", name),
            &pool,
            |b, pool| {
                b.iter(|| {
                    pool.install(|| {
                        assemble(&line, black_box(&disc), &p1, AssemblyRoute::TorusSymbol).unwrap()
                    })
                })
            },
        );
        g.bench_with_input(
            BenchmarkId::new("torus_spectrum_2d", name),
            &pool,
            |b, pool| {
                b.iter(|| pool.install(|| torus_spectrum(black_box(40.0), &params, 300.0).unwrap()))
            },
        );
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
