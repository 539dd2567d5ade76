use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use parrondo::chain::{apply_transition_into, stationary_with, ChainSpec, StationaryOptions};
use parrondo::regions::{estimate_volumes, VolumeDim};
use parrondo::sim::{simulate_replications, SimConfig};
use parrondo::{Exec, Params};

const PATHS: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn transition(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_transition");
    let p = Params::new(0.1, 0.6, 0.6, 0.75).unwrap();
    for n in [12u32, 16] {
        let spec = ChainSpec::new(n, p).unwrap();
        let v = vec![1.0 / spec.states() as f64; spec.states()];
        let mut out = vec![0.0; spec.states()];
        for (name, exec) in PATHS {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| apply_transition_into(&spec, black_box(&v), &mut out, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn stationary(c: &mut Criterion) {
    let mut group = c.benchmark_group("stationary");
    group.sample_size(10);
    let spec = ChainSpec::new(12, Params::new(0.75, 0.625, 0.625, 0.25).unwrap()).unwrap();
    for (name, exec) in PATHS {
        let opts = StationaryOptions {
            exec,
            ..StationaryOptions::default()
        };
        group.bench_function(name, |b| b.iter(|| stationary_with(&spec, &opts).unwrap()));
    }
    group.finish();
}

fn volumes(c: &mut Criterion) {
    let mut group = c.benchmark_group("volumes_4d_200k");
    group.sample_size(10);
    for (name, exec) in PATHS {
        group.bench_function(name, |b| {
            b.iter(|| estimate_volumes(VolumeDim::Full4d, 200_000, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("ring_replications_8x");
    group.sample_size(10);
    let cfg = SimConfig::new(64, Params::new(0.1, 0.6, 0.6, 0.75).unwrap(), 200.0, 1);
    for (name, exec) in PATHS {
        group.bench_function(name, |b| {
            b.iter(|| simulate_replications(&cfg, &[vec![0]], 8, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, transition, stationary, volumes, replications);
criterion_main!(benches);
