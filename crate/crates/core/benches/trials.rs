use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mlr_core::harness::{run_cell, TrialCell};
use mlr_core::oracles::cone_spectrum_mc;
use mlr_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn cell_trials(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_cell");
    group.sample_size(10);
    for (k, n) in [(5, 100), (10, 300)] {
        let cell = TrialCell::new(k, n);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, format!("k{k}_n{n}_x32")), &cell, |b, cell| {
                b.iter(|| run_cell(black_box(cell), 32, 0, exec))
            });
        }
    }
    group.finish();
}

fn cone_monte_carlo(c: &mut Criterion) {
    let mut group = c.benchmark_group("cone_spectrum_mc");
    group.sample_size(10);
    let u = [1.0, 0.0, 0.0];
    let v = [0.0, 1.0, 0.0];
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, "n_mc_200000"), |b| {
            b.iter(|| cone_spectrum_mc(black_box(&u), black_box(&v), 200_000, 7, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cell_trials, cone_monte_carlo);
criterion_main!(benches);
