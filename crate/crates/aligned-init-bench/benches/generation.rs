//! Wall-clock comparison of the two aligned draw constructions, plus the
//! closed-form centering factor against its numerical counterpart. The
//! single-frame construction replaces one of the two QR factorizations
//! with a closed-form triangular factor, so it should win at every shape.

use aligned_init::linalg::{centering_projector, cholesky_p, cholesky_psd, DEFAULT_PIVOT_TOL};
use aligned_init::{generate_alg1, generate_alg2, RngStream};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn bench_draws(c: &mut Criterion) {
    let mut group = c.benchmark_group("draw");
    for &(m, n) in &[(64usize, 64usize), (256, 256), (512, 512), (64, 784)] {
        let label = format!("{m}x{n}");
        group.bench_with_input(BenchmarkId::new("two_frame", &label), &(m, n), |b, &(m, n)| {
            let mut rng = RngStream::new(7).rng();
            b.iter(|| generate_alg1(m, n, &mut rng).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("single_frame", &label), &(m, n), |b, &(m, n)| {
            let mut rng = RngStream::new(7).rng();
            b.iter(|| generate_alg2(m, n, &mut rng).unwrap());
        });
    }
    group.finish();
}

fn bench_cholesky(c: &mut Criterion) {
    let mut group = c.benchmark_group("centering_factor");
    for &m in &[64usize, 256, 512] {
        group.bench_with_input(BenchmarkId::new("closed_form", m), &m, |b, &m| {
            b.iter(|| cholesky_p(m).unwrap());
        });
        group.bench_with_input(BenchmarkId::new("numerical", m), &m, |b, &m| {
            let p = centering_projector(m);
            b.iter(|| cholesky_psd(&p, DEFAULT_PIVOT_TOL).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_draws, bench_cholesky);
criterion_main!(benches);
