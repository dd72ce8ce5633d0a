use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use qperp_core::samplers::{FactorizationSampler, PathSampler, DEFAULT_EPS_SERIES, DEFAULT_EPS_TAIL};
use qperp_core::{QGammaLaw, QParams, RngState, SampleBatch, SamplerConfig, SamplerId};

fn single_draws(c: &mut Criterion) {
    let params = QParams::new(0.8, 1.5).unwrap();
    let path = PathSampler::new(params, None, DEFAULT_EPS_TAIL).unwrap();
    let fact = FactorizationSampler::new(&params, DEFAULT_EPS_SERIES).unwrap();
    let qg = QGammaLaw::new(0.5, 0.9).unwrap();
    let mut rng = RngState::new(1);
    c.bench_function("path draw", |b| b.iter(|| path.sample(&mut rng)));
    c.bench_function("factorization draw", |b| b.iter(|| fact.sample(&mut rng)));
    c.bench_function("q-gamma inverse cdf draw", |b| b.iter(|| qg.sample_invcdf(&mut rng)));
    c.bench_function("q-gamma geometric sum draw", |b| b.iter(|| qg.sample_geomsum(&mut rng)));
}

fn batches(c: &mut Criterion) {
    let params = QParams::new(0.5, 1.5).unwrap();
    let n = 10_000;
    let mut group = c.benchmark_group("batch");
    group.throughput(Throughput::Elements(n as u64)).sample_size(10);
    for id in [SamplerId::Path, SamplerId::Series, SamplerId::Factorization] {
        group.bench_function(id.as_str(), |b| {
            b.iter_batched(
                SamplerConfig::default,
                |cfg| SampleBatch::generate(id, params, 7, n, &cfg),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, single_draws, batches);
criterion_main!(benches);
