use adrx_core::mc::{estimate_error, estimate_error_serial, ReceiverConfig};
use adrx_core::signal::PskAlphabet;
use adrx_core::strategy::Strategy;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

const TRIALS: u64 = 50_000;

fn serial_vs_parallel(c: &mut Criterion) {
    let alphabet = PskAlphabet::from_mean_photons(4, 1.0).unwrap();
    let mut group = c.benchmark_group("estimate_error");
    group.throughput(Throughput::Elements(TRIALS));
    group.sample_size(20);
    for strategy in [Strategy::Cyclic, Strategy::Bayesian] {
        let cfg = ReceiverConfig::new(0.3, strategy);
        group.bench_with_input(BenchmarkId::new("serial", strategy), &cfg, |b, cfg| {
            b.iter(|| estimate_error_serial(&alphabet, cfg, TRIALS, 1).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("parallel", strategy), &cfg, |b, cfg| {
            b.iter(|| estimate_error(&alphabet, cfg, TRIALS, 1, 0).unwrap())
        });
    }
    group.finish();
}

fn analytic_cyclic(c: &mut Criterion) {
    let alphabet = PskAlphabet::from_mean_photons(4, 2.0).unwrap();
    c.bench_function("cyclic_error_probability qpsk a2=2", |b| {
        b.iter(|| adrx_core::analytic::cyclic_error_probability(&alphabet, 0.1, 1e-12).unwrap())
    });
}

criterion_group!(benches, serial_vs_parallel, analytic_cyclic);
criterion_main!(benches);
