use criterion::{criterion_group, criterion_main, Criterion};

use ifgan_core::dataframe::encode;
use ifgan_core::missingness::{ampute_dataset, AmputationConfig, Mechanism};
use ifgan_core::synth::linear_blend_dataset;
use ifgan_core::RngStream;

fn bench_pipeline_stages(c: &mut Criterion) {
    let ds = linear_blend_dataset(1000, 8, 0.05, &mut RngStream::new(5)).unwrap();

    c.bench_function("ampute/mcar-1000x8", |b| {
        b.iter(|| {
            let cfg = AmputationConfig::new(Mechanism::Mcar, 0.3);
            ampute_dataset(&ds, &cfg, &mut RngStream::new(9)).unwrap()
        })
    });

    let cfg = AmputationConfig::new(Mechanism::Mnar, 0.5);
    let (amputed, _) = ampute_dataset(&ds, &cfg, &mut RngStream::new(9)).unwrap();
    c.bench_function("encode/1000x8", |b| b.iter(|| encode(&amputed).unwrap()));
}

criterion_group!(benches, bench_pipeline_stages);
criterion_main!(benches);
