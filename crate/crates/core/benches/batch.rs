use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use bara::{batch, Execution, PolicyKind, RunConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_batch(c: &mut Criterion) {
    let config = RunConfig::default();
    let seeds: Vec<u64> = (0..10).collect();
    let mut group = c.benchmark_group("batch_10_seeds");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| batch(black_box(&config), &PolicyKind::ALL, &seeds, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let config = RunConfig::default();
    let env = config.build_environment(0).unwrap();
    let mut group = c.benchmark_group("oracle");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| config.oracle(black_box(env.as_ref()), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch, bench_oracle);
criterion_main!(benches);
