use std::hint::black_box;

use ccn_agg::{analyze_router, analyze_tree, demand_vector, zipf_profile, AnalysisOptions, DelayMoments, TreeScenario};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn router(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze_router");
    for n in [1_000u64, 100_000] {
        let rates = demand_vector(&zipf_profile(n, 0.8).unwrap(), 1e4).unwrap();
        let delays = vec![DelayMoments::deterministic(0.03); n as usize];
        let capacity = n / 100;
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| analyze_router(black_box(&rates), &delays, capacity).unwrap())
        });
    }
    group.finish();
}

fn tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("analyze_tree");
    group.sample_size(10);
    for n in [10_000u64, 1_000_000] {
        let scenario = TreeScenario {
            arity: 10,
            levels: 3,
            consumer_rate: 1e5,
            link_rtt: 0.03,
            capacities: vec![n / 1_000; 3],
            popularity: zipf_profile(n, 0.8).unwrap(),
        };
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| analyze_tree(black_box(&scenario), &AnalysisOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, router, tree);
criterion_main!(benches);
