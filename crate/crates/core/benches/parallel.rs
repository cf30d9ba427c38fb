//! Data-parallel grid workloads, sequential vs rayon.
//!
//! The two hot loops of the certification pipeline are embarrassingly
//! parallel: rotation numbers on sample grids and level tracing across a
//! band. Run with `cargo bench -p vortex-pair`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rayon::prelude::*;
use std::hint::black_box;
use vortex_pair::dynamics::{VortexConfig, WState};
use vortex_pair::flow::IntegratorSettings;
use vortex_pair::levelset::trace_level;
use vortex_pair::twist::rotation_pair;
use vortex_pair::{DomainModel, Point2};

fn rotation_grid_states(n: usize) -> Vec<WState> {
    let disk = DomainModel::unit_disk();
    let cfg = VortexConfig::new(0.5, 0.5).unwrap();
    let curve = trace_level(&disk, &cfg, 0.1, Point2::ZERO, 32).unwrap();
    (0..n)
        .map(|i| {
            let theta = std::f64::consts::TAU * i as f64 / n as f64;
            WState::new(Point2::unit(theta) * 0.05, curve.samples[i * curve.samples.len() / n])
        })
        .collect()
}

fn bench_rotation_grid(c: &mut Criterion) {
    let disk = DomainModel::unit_disk();
    let cfg = VortexConfig::new(0.5, 0.5).unwrap();
    let states = rotation_grid_states(16);
    let settings = IntegratorSettings::with_tols(1e-6, 1e-8);
    let window = 1.3;

    let eval = |w: &WState| rotation_pair(&disk, &cfg, w, window, Point2::ZERO, &settings).unwrap();

    let mut group = c.benchmark_group("rotation_grid");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("seq", states.len()), &states, |b, states| {
        b.iter(|| {
            let rots: Vec<(f64, f64)> = states.iter().map(eval).collect();
            black_box(rots)
        })
    });
    group.bench_with_input(BenchmarkId::new("rayon", states.len()), &states, |b, states| {
        b.iter(|| {
            let rots: Vec<(f64, f64)> = states.par_iter().map(eval).collect();
            black_box(rots)
        })
    });
    group.finish();
}

fn bench_level_band(c: &mut Criterion) {
    let disk = DomainModel::unit_disk();
    let cfg = VortexConfig::new(0.5, 0.5).unwrap();
    let levels: Vec<f64> = (0..8).map(|i| 0.08 + 0.01 * i as f64).collect();

    let eval = |&l: &f64| trace_level(&disk, &cfg, l, Point2::ZERO, 48).unwrap().period;

    let mut group = c.benchmark_group("level_band");
    group.sample_size(10);
    group.bench_with_input(BenchmarkId::new("seq", levels.len()), &levels, |b, levels| {
        b.iter(|| {
            let periods: Vec<f64> = levels.iter().map(eval).collect();
            black_box(periods)
        })
    });
    group.bench_with_input(BenchmarkId::new("rayon", levels.len()), &levels, |b, levels| {
        b.iter(|| {
            let periods: Vec<f64> = levels.par_iter().map(eval).collect();
            black_box(periods)
        })
    });
    group.finish();
}

criterion_group!(benches, bench_rotation_grid, bench_level_band);
criterion_main!(benches);
