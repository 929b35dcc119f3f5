use std::hint::black_box;

use ccn_agg::sim::{run_simulation, SimConfig};
use ccn_agg::{zipf_profile, TreeScenario};
use criterion::{criterion_group, criterion_main, Criterion, Throughput};

fn simulate(c: &mut Criterion) {
    let scenario = TreeScenario {
        arity: 10,
        levels: 3,
        consumer_rate: 100.0,
        link_rtt: 0.06,
        capacities: vec![10, 10, 10],
        popularity: zipf_profile(100, 1.0).unwrap(),
    };
    let requests = 200_000;
    let cfg = SimConfig::new(scenario, requests, 0.5, 1);
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.throughput(Throughput::Elements(requests));
    group.bench_function("small_tree", |b| b.iter(|| run_simulation(black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, simulate);
criterion_main!(benches);
