use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ifgan_bench::mcar_fixture;
use ifgan_core::baselines::{impute_knn, impute_mean, impute_mice, impute_svd, BaselineConfig};
use ifgan_core::imputer::{impute, IfganConfig};
use ifgan_core::RngStream;

fn bench_baselines(c: &mut Criterion) {
    let mut group = c.benchmark_group("baselines");
    for &rows in &[100usize, 400] {
        let fx = mcar_fixture(rows, 8, 0.2, 7);
        let cfg = BaselineConfig::default();
        group.bench_with_input(BenchmarkId::new("mean", rows), &fx, |b, fx| {
            b.iter(|| impute_mean(&fx.x_hat, &fx.mask).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("knn", rows), &fx, |b, fx| {
            b.iter(|| impute_knn(&fx.x_hat, &fx.mask, &cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("svd", rows), &fx, |b, fx| {
            b.iter(|| {
                let mut rng = RngStream::new(1);
                impute_svd(&fx.x_hat, &fx.mask, &cfg, &mut rng).unwrap()
            })
        });
        group.bench_with_input(BenchmarkId::new("mice", rows), &fx, |b, fx| {
            b.iter(|| impute_mice(&fx.x_hat, &fx.mask, &fx.map, &cfg).unwrap())
        });
    }
    group.finish();
}

fn bench_adversarial(c: &mut Criterion) {
    let mut group = c.benchmark_group("adversarial");
    group.sample_size(10);
    let fx = mcar_fixture(200, 6, 0.2, 11);
    // Trimmed budgets keep a single run in benchmark territory.
    let mut cfg = IfganConfig::default();
    cfg.train.generator_steps = 100;
    cfg.train.discriminator_steps = 20;
    cfg.train.batch_size = 64;
    cfg.max_sweeps = 2;

    group.bench_function("ifgan", |b| {
        b.iter(|| impute(&fx.x_hat, &fx.mask, &fx.map, &cfg, &RngStream::new(3)).unwrap())
    });
    let nodisc = IfganConfig {
        use_discriminator: false,
        ..cfg.clone()
    };
    group.bench_function("ifgan-nodisc", |b| {
        b.iter(|| impute(&fx.x_hat, &fx.mask, &fx.map, &nodisc, &RngStream::new(3)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_baselines, bench_adversarial);
criterion_main!(benches);
