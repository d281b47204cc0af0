//! Compares the data-parallel resolvent sweep against the sequential
//! fallback on identical contexts. The two paths must return identical
//! values (asserted in unit tests); this measures what the parallelism
//! buys at desk sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bresse_core::discretize::{assemble, Grid};
use bresse_core::model::PhysicalParameters;
use bresse_core::spectral::{
    resolvent_sweep_with_context, resolvent_sweep_with_context_sequential, sweep_context,
    SweepConfig,
};

fn sweep_paths(c: &mut Criterion) {
    let p = PhysicalParameters { k3: 2.0, ..Default::default() };
    let mut group = c.benchmark_group("resolvent_sweep");
    group.sample_size(10);
    for n in [24usize, 64] {
        let grid = Grid::new(n, p.length).unwrap();
        let op = assemble(&p, &grid).unwrap();
        let cfg = SweepConfig::default_for(&p, grid.h()).unwrap();
        let ctx = sweep_context(&op, &cfg).unwrap();
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| resolvent_sweep_with_context(&ctx, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| resolvent_sweep_with_context_sequential(&ctx, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep_paths);
criterion_main!(benches);
