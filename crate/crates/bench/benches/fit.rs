use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use cscox_bench::{left_sample, right_sample, RHO, TAU};
use cscox_core::{
    bootstrap, estimate_p, fit, loglik_left, loglik_right, score_left, score_right,
    BootstrapConfig, FitConfig, Truncation,
};

const SIZES: [usize; 2] = [500, 2000];

fn criterion(c: &mut Criterion) {
    let mut group = c.benchmark_group("right");
    for n in SIZES {
        let d = right_sample(n);
        let p = estimate_p(&d);
        let beta = [0.4, -0.4];
        group.bench_with_input(BenchmarkId::new("loglik", n), &d, |b, d| {
            b.iter(|| loglik_right(d, p, black_box(&beta), TAU).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("score", n), &d, |b, d| {
            b.iter(|| score_right(d, p, black_box(&beta), TAU).unwrap())
        });
        let config = FitConfig {
            tau: Truncation::Fixed(TAU),
            ..FitConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("fit", n), &d, |b, d| {
            b.iter(|| fit(d, &config).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("left");
    for n in SIZES {
        let d = left_sample(n);
        let p = estimate_p(&d);
        let beta = [0.4, -0.4];
        group.bench_with_input(BenchmarkId::new("loglik", n), &d, |b, d| {
            b.iter(|| loglik_left(d, p, black_box(&beta), RHO).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("score", n), &d, |b, d| {
            b.iter(|| score_left(d, p, black_box(&beta), RHO).unwrap())
        });
        let config = FitConfig {
            rho: Truncation::Fixed(RHO),
            ..FitConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("fit", n), &d, |b, d| {
            b.iter(|| fit(d, &config).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    let d = right_sample(500);
    let config = FitConfig {
        tau: Truncation::Fixed(TAU),
        ..FitConfig::default()
    };
    let base = fit(&d, &config).unwrap();
    let boot = BootstrapConfig {
        replicates: 50,
        ..BootstrapConfig::default()
    };
    group.bench_function("right_500_b50", |b| {
        b.iter(|| bootstrap(&d, &base, &config, &boot).unwrap())
    });
    group.finish();
}

criterion_group!(benches, criterion);
criterion_main!(benches);
