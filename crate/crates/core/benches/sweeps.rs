//! Parallel versus sequential execution on the main sweeps. Caches are
//! cleared before every iteration so each sample does the full computation.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use weakforms::duality::{default_box, duality_check};
use weakforms::exec;
use weakforms::spaces::gap_sets;
use weakforms::trace::TraceTable;

const MODES: [(&str, bool); 2] = [("parallel", true), ("sequential", false)];

fn trace_tables(c: &mut Criterion) {
    let mut group = c.benchmark_group("trace_table");
    group.sample_size(10);
    for n in [100usize, 400, 1600] {
        for (mode, on) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, n), &n, |b, &n| {
                exec::set_parallel(on);
                b.iter(|| black_box(TraceTable::compute(23, 6, n).unwrap()));
            });
        }
    }
    exec::set_parallel(true);
    group.finish();
}

fn duality_pairs(c: &mut Criterion) {
    let mut group = c.benchmark_group("duality_box");
    group.sample_size(10);
    for (p, k, size) in [(11u64, 0i64, 20i64), (17, 6, 20), (23, -10, 15)] {
        let (mr, nr) = default_box(p, k, size).unwrap();
        for (mode, on) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, format!("p{p}_k{k}_{size}")), &(), |b, _| {
                exec::set_parallel(on);
                b.iter(|| {
                    weakforms::clear_caches();
                    black_box(duality_check(p, k, mr, nr).unwrap())
                });
            });
        }
    }
    exec::set_parallel(true);
    group.finish();
}

fn gap_sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("gap_sweep");
    group.sample_size(10);
    for p in [19u64, 29] {
        for (mode, on) in MODES {
            group.bench_with_input(BenchmarkId::new(mode, p), &p, |b, &p| {
                exec::set_parallel(on);
                b.iter(|| {
                    weakforms::clear_caches();
                    for k in (2..=p as i64 - 1).step_by(2) {
                        black_box(gap_sets(p, k).unwrap());
                    }
                });
            });
        }
    }
    exec::set_parallel(true);
    group.finish();
}

criterion_group!(benches, trace_tables, duality_pairs, gap_sweeps);
criterion_main!(benches);
