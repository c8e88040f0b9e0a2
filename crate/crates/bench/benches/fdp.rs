use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use testforge::fdp::{encode, Dialect};
use testforge_bench::call_list;

fn bench_encode(c: &mut Criterion) {
    let mut group = c.benchmark_group("fdp_encode");
    for n in [10usize, 100, 1000] {
        let calls = call_list(n);
        group.throughput(Throughput::Elements(n as u64));
        for dialect in [Dialect::Llvm, Dialect::Jazzer] {
            group.bench_with_input(BenchmarkId::new(format!("{dialect:?}"), n), &calls, |b, calls| {
                b.iter(|| encode(dialect, calls).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_encode);
criterion_main!(benches);
