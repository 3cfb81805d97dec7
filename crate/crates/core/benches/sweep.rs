use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qincompat::cli::config::ModelConfig;
use qincompat::model::StatisticalModel;
use qincompat::sweep::{lambda_grid, sweep_sequential, SweepOptions};

fn model(name: &str) -> StatisticalModel {
    let path = format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"));
    ModelConfig::parse(&std::fs::read_to_string(path).unwrap()).unwrap().to_model().unwrap()
}

fn sweeps(c: &mut Criterion) {
    let opts = SweepOptions::default();
    let cases = [
        ("qutrit", model("qutrit.json"), lambda_grid(-0.12, 1.0, 16).unwrap()),
        ("three_qubit", model("three_qubit.json"), lambda_grid(0.05, 1.0, 8).unwrap()),
    ];
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10).measurement_time(Duration::from_secs(5));
    for (name, m, grid) in &cases {
        group.bench_with_input(BenchmarkId::new("sequential", name), grid, |b, g| {
            b.iter(|| sweep_sequential(black_box(m), g, &opts).unwrap())
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", name), grid, |b, g| {
            b.iter(|| qincompat::sweep::sweep_parallel(black_box(m), g, &opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
