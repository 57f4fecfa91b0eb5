use covest_bench::Fixture;
use covest_core::estimators::{estimate_l21, estimate_ml_from, estimate_spice, nnls_init};
use covest_core::harness::derive_rng;
use covest_core::metrics::evaluate;
use covest_core::music::run_music;
use covest_core::{SolverConfig, SpikeCountConfig};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn estimators(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    for (m, n) in [(20, 20), (20, 160)] {
        let f = Fixture::ula(m, n, 7);
        let init = nnls_init(&f.dict, &f.sample.matrix, f.n0, &cfg).unwrap();
        let mut g = c.benchmark_group(format!("ula_m{m}_n{n}"));
        g.sample_size(10);
        g.bench_function("music", |b| {
            b.iter(|| {
                let mut rng = derive_rng(1, "bench", &[]);
                run_music(black_box(&f.sample.matrix), &f.geom, &SpikeCountConfig::default(), f.resolution, &mut rng).unwrap()
            })
        });
        g.bench_function("nnls", |b| b.iter(|| nnls_init(&f.dict, black_box(&f.sample.matrix), f.n0, &cfg).unwrap()));
        g.bench_function("ml", |b| {
            b.iter(|| estimate_ml_from(&f.dict, black_box(&f.sample.matrix), f.n0, &init.u, &cfg).unwrap())
        });
        g.bench_function("spice", |b| b.iter(|| estimate_spice(&f.steering, black_box(&f.sample), f.n0, &cfg).unwrap()));
        g.bench_function("l21", |b| b.iter(|| estimate_l21(&f.steering, black_box(&f.snapshots), &cfg).unwrap()));
        g.bench_function("metrics", |b| b.iter(|| evaluate(&f.sigma_h, black_box(&f.sample.matrix)).unwrap()));
        g.finish();
    }
}

criterion_group!(benches, estimators);
criterion_main!(benches);
