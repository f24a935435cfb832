use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use dendrolearn::bbn::{learn_bbn_greedy, DEFAULT_MAX_PARENTS};
use dendrolearn::forest::learn_forest;
use dendrolearn::partitions::count_models;
use dendrolearn::Penalty;
use dendrolearn_bench::chain_dataset;

fn forest(c: &mut Criterion) {
    let mut group = c.benchmark_group("learn_forest");
    for r in [8, 16, 32] {
        let d = chain_dataset(r, 3, 5000, 1);
        group.bench_with_input(BenchmarkId::from_parameter(r), &d, |b, d| {
            b.iter(|| learn_forest(black_box(d), Penalty::Mdl))
        });
    }
    group.finish();
}

fn greedy_bbn(c: &mut Criterion) {
    let d = chain_dataset(10, 3, 5000, 2);
    let order: Vec<usize> = (0..10).collect();
    c.bench_function("learn_bbn_greedy/10", |b| {
        b.iter(|| learn_bbn_greedy(black_box(&d), &order, Penalty::Mdl, DEFAULT_MAX_PARENTS).unwrap())
    });
}

fn counts(c: &mut Criterion) {
    let d = chain_dataset(6, 4, 100_000, 3);
    c.bench_function("conditional_counts/3_parents", |b| {
        b.iter(|| d.conditional_counts(black_box(5), &[2, 3, 4]).unwrap())
    });
}

fn bell(c: &mut Criterion) {
    c.bench_function("count_models/200", |b| b.iter(|| count_models(black_box(200)).unwrap()));
}

criterion_group!(benches, forest, greedy_bbn, counts, bell);
criterion_main!(benches);
