//! Single-thread pool against the global rayon pool on the data-parallel
//! hot spots. `cargo bench --no-default-features` runs the sequential
//! fallback instead, where both arms coincide.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use std::hint::black_box;

use soft_floer::carnot::{limit_measure_b, CarnotAlgebra, MeasureOptions};
use soft_floer::degree::{circle_power, sphere_degree, DegreeOptions};
use soft_floer::galerkin::{index_galerkin, GalerkinOptions};
use soft_floer::morse::{morse_report, MorseOptions};
use soft_floer::symplectic::{TimeSymmetricFamily, TrigSeries};
use soft_floer::torus::{Mode, TorusHamiltonian};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", single), ("pool", all)]
}

fn family() -> TimeSymmetricFamily {
    let s = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.2, 0.0, 0.1, 0.2, -0.5, 0.3, 0.0, 0.0, 0.3, 0.8, 0.2, 0.1, 0.0, 0.2, -1.2,
        ],
    );
    let series = TrigSeries {
        constant: s.clone(),
        cos: vec![(1, &s * 0.4)],
        sin: vec![(2, s.transpose() * 0.3)],
    };
    TimeSymmetricFamily::trig(2, series).unwrap()
}

fn galerkin(c: &mut Criterion) {
    let fam = family();
    let opts = GalerkinOptions {
        cutoffs: vec![16, 32, 48, 64],
        ..Default::default()
    };
    let mut g = c.benchmark_group("galerkin_index");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| black_box(index_galerkin(&fam, &opts).unwrap())))
        });
    }
    g.finish();
}

fn morse(c: &mut Criterion) {
    let a = 0.05 / (2.0 * std::f64::consts::PI);
    let mode = |k_q| Mode {
        k_t: 0,
        k_q,
        amp: a,
        phase: 0.0,
    };
    let h = TorusHamiltonian::new(1, vec![mode(vec![1, 0]), mode(vec![0, 1])]).unwrap();
    let opts = MorseOptions::default();
    let mut g = c.benchmark_group("morse_report");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| black_box(morse_report(&h, &opts).unwrap())))
        });
    }
    g.finish();
}

fn degree(c: &mut Criterion) {
    let m = circle_power(3).unwrap();
    let opts = DegreeOptions::default();
    let mut g = c.benchmark_group("sphere_degree");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| black_box(sphere_degree(&m, &opts).unwrap())))
        });
    }
    g.finish();
}

fn carnot(c: &mut Criterion) {
    let gens: Vec<DMatrix<f64>> = (0..2)
        .map(|k| DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j * 3 + k * 5) % 11) as f64 / 11.0 - 0.5))
        .map(|m| (&m - m.transpose()) * 0.5)
        .collect();
    let alg = CarnotAlgebra::new(6, gens).unwrap();
    let opts = MeasureOptions::default();
    let mut g = c.benchmark_group("limit_measure_b");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| black_box(limit_measure_b(&alg, &[1.0, 0.3], &opts).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, galerkin, morse, degree, carnot);
criterion_main!(benches);
