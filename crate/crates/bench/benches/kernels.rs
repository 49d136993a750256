use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lastzero_core::{
    crossing_log_probability, last_zero_cdf, last_zero_log_survival, last_zero_pdf, ldp_scan,
    quantile, sample_last_zero, simulate_last_zero, CrossingWindow, DriftedBMParams, McConfig,
    QuadratureConfig, RGrid, RngSeed, RootFindConfig,
};

fn closed_forms(c: &mut Criterion) {
    let q = QuadratureConfig::default();
    let p = DriftedBMParams::new(1.0, 1.0).unwrap();
    let far = DriftedBMParams::scaled(1.0, 1e6, 1.0).unwrap();
    let w = CrossingWindow::new(0.5, 1.0).unwrap();

    c.bench_function("cdf", |b| {
        b.iter(|| last_zero_cdf(&p, black_box(0.3), &q).unwrap())
    });
    c.bench_function("pdf", |b| {
        b.iter(|| last_zero_pdf(&p, black_box(0.3), &q).unwrap())
    });
    c.bench_function("log_survival r=1e6", |b| {
        b.iter(|| last_zero_log_survival(&far, black_box(0.4), &q).unwrap())
    });
    c.bench_function("crossing_log", |b| {
        b.iter(|| crossing_log_probability(black_box(100.0), &w, &q).unwrap())
    });
    c.bench_function("ldp_scan default grid", |b| {
        b.iter(|| ldp_scan(1.0, 1.0, black_box(0.4), &RGrid::default(), &q).unwrap())
    });
}

fn sampling(c: &mut Criterion) {
    let q = QuadratureConfig::default();
    let rf = RootFindConfig::default();
    let p = DriftedBMParams::new(1.0, 1.0).unwrap();
    c.bench_function("quantile", |b| {
        b.iter(|| quantile(&p, black_box(0.42), &rf, &q).unwrap())
    });
    c.bench_function("sample 10k", |b| {
        b.iter(|| sample_last_zero(&p, 10_000, RngSeed::new(1, 0), &rf, &q).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let p = DriftedBMParams::new(1.0, 1.0).unwrap();
    let cfg = McConfig::new(1000, 1e-3, RngSeed::new(3, 0), true).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("1000 paths x 1000 steps", |b| {
        b.iter(|| simulate_last_zero(&p, &cfg).unwrap())
    });
    group.finish();
}

criterion_group!(benches, closed_forms, sampling, monte_carlo);
criterion_main!(benches);
