use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nilflow::analysis::empirical_distribution;
use nilflow::birkhoff::{weyl_sum, WeylSumSpec};
use nilflow::moduli::golden_frame;
use nilflow::par;
use nilflow::spectral::{CharLabel, Observable};
use nilflow::Lattice;

fn threads() -> Vec<usize> {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut t = vec![1, cores.max(2)];
    t.dedup();
    t
}

fn weyl(c: &mut Criterion) {
    let ssp = golden_frame(Lattice::UNIT).return_params().unwrap();
    let spec = WeylSumSpec { label: CharLabel::new(0, 1).unwrap(), ssp, y: 0.123, z: 0.37, terms: 1 << 24 };
    let mut g = c.benchmark_group("weyl_sum");
    g.throughput(Throughput::Elements(spec.terms));
    g.sample_size(10);
    for n in threads() {
        g.bench_with_input(BenchmarkId::new("threads", n), &n, |b, &n| {
            b.iter(|| par::with_threads(n, || weyl_sum(black_box(&spec))))
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let lattice = Lattice::UNIT;
    let f = Observable::single(lattice, CharLabel::new(0, 1).unwrap());
    let a = golden_frame(lattice);
    let mut g = c.benchmark_group("empirical_distribution");
    g.sample_size(10);
    for n in threads() {
        g.bench_with_input(BenchmarkId::new("threads", n), &n, |b, &n| {
            b.iter(|| par::with_threads(n, || empirical_distribution(&f, &a, 1e3, 2000, black_box(1)).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, weyl, monte_carlo);
criterion_main!(benches);
