use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fleetq::sim::run_simulation;
use fleetq_bench::{case_study, pipeline};

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(20);
    let single = case_study(30_000.0);
    group.bench_function("case_study_30k_min", |b| b.iter(|| run_simulation(black_box(&single), 1).unwrap()));
    let two_stage = pipeline(10_000.0);
    group.bench_function("pipeline_10k_min", |b| b.iter(|| run_simulation(black_box(&two_stage), 1).unwrap()));
    group.finish();
}

criterion_group!(benches, simulation);
criterion_main!(benches);
