use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pipdim::estimate::Spectrum;
use pipdim::exec::Exec;
use pipdim::linalg::{random_orthonormal, Embedding};
use pipdim::montecarlo::{mc_curve, MonteCarloConfig};
use pipdim::select::stability_matrix;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn monte_carlo(c: &mut Criterion) {
    let spectrum = Spectrum::new((1..=40).map(|i| 20.0 / i as f64).collect(), 150).unwrap();
    let mut group = c.benchmark_group("mc_curve");
    group.sample_size(10);
    for (name, exec) in MODES {
        let config = MonteCarloConfig { samples: 8, base_seed: 1, symmetric: false, exec };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mc_curve(black_box(&spectrum), 0.5, 0.5, &config).unwrap())
        });
    }
    group.finish();
}

fn stability(c: &mut Criterion) {
    let dims = [5, 10, 20, 30, 40, 50];
    let run = |seed: u64| -> Vec<Embedding> {
        dims.iter()
            .map(|&k| Embedding::new(random_orthonormal(400, k, seed + k as u64).unwrap()))
            .collect()
    };
    let (run1, run2) = (run(0), run(1000));
    let mut group = c.benchmark_group("stability_matrix");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| stability_matrix(black_box(&run1), black_box(&run2), exec))
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, stability);
criterion_main!(benches);
