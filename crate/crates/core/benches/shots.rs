//! Sequential vs rayon-parallel execution of the shot-level workloads.
//!
//! `cargo bench -p sivsim-core --bench shots`. Without the `parallel`
//! feature both variants run sequentially.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sivsim::config::defaults;
use sivsim::exec::Executor;
use sivsim::noise::{mc_coherence, NoiseModel};
use sivsim::readout::simulate_counts;
use sivsim::sequence::{build_ramsey, run_experiment, Settings};
use std::hint::black_box;

fn executors() -> [(&'static str, Executor); 2] {
    [("sequential", Executor::Sequential), ("parallel", Executor::Parallel)]
}

fn readout(c: &mut Criterion) {
    let sys = defaults().system.clone();
    let mut g = c.benchmark_group("readout_counts");
    g.sample_size(10);
    for (name, exec) in executors() {
        g.bench_with_input(BenchmarkId::new(name, 2000), &exec, |b, exec| {
            b.iter(|| simulate_counts(&sys, 1.0, 0.15, 20e-3, black_box(1000), 1, exec).unwrap())
        });
    }
    g.finish();
}

fn ramsey(c: &mut Criterion) {
    let sys = defaults().system.clone();
    let settings = Settings {
        init_duration: 0.15,
        readout_duration: 20e-3,
        shots: 100,
        ..Settings::default()
    };
    let delays: Vec<f64> = (0..20).map(|i| i as f64 * 0.1e-6).collect();
    let seq = build_ramsey(&delays, 550e3, &settings).unwrap();
    let noise = [NoiseModel::QuasiStatic { sigma: 1e6 }];
    let mut g = c.benchmark_group("ramsey_sweep");
    g.sample_size(10);
    for (name, exec) in executors() {
        g.bench_with_input(BenchmarkId::new(name, 2000), &exec, |b, exec| {
            b.iter(|| run_experiment(&seq, &sys, &noise, black_box(1), 1e-9, exec).unwrap())
        });
    }
    g.finish();
}

fn ou_coherence(c: &mut Criterion) {
    let models = [NoiseModel::Ou { sigma: 1.4e5, tau_c: 1e-3 }];
    let times: Vec<f64> = (1..=10).map(|i| i as f64 * 0.1e-3).collect();
    let mut g = c.benchmark_group("ou_phase_shots");
    g.sample_size(10);
    for (name, exec) in executors() {
        g.bench_with_input(BenchmarkId::new(name, 4000), &exec, |b, exec| {
            b.iter(|| mc_coherence(&models, 4, &times, black_box(4000), 1, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, readout, ramsey, ou_coherence);
criterion_main!(benches);
