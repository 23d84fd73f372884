use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use tropdiv::{canonical, dhar_reduce, enumerate_cells, metric_rank, CellCaps, RankOptions};
use tropdiv_bench::{complete_graph, dumbbell, random_instance};

fn rank(c: &mut Criterion) {
    let g = dumbbell();
    let k = canonical(&g);
    let opts = RankOptions::default();
    c.bench_function("metric_rank/dumbbell_K", |b| b.iter(|| metric_rank(&g, black_box(&k), &opts).unwrap()));
    for genus in [1, 2, 3] {
        let (g, d) = random_instance(17 + genus as u64, genus, 2 * genus as i64);
        c.bench_function(&format!("metric_rank/random_genus_{genus}"), |b| {
            b.iter(|| metric_rank(&g, black_box(&d), &opts).unwrap())
        });
    }
}

fn dhar(c: &mut Criterion) {
    for n in [4, 6, 8] {
        let g = complete_graph(n);
        let d: Vec<i64> = (0..n as i64).map(|i| (i * 7) % 11 - 4).collect();
        c.bench_function(&format!("dhar_reduce/K{n}"), |b| b.iter(|| dhar_reduce(&g, black_box(&d), 0).unwrap()));
    }
}

fn cells(c: &mut Criterion) {
    let g = dumbbell();
    let k = canonical(&g);
    let caps = CellCaps::default();
    c.bench_function("enumerate_cells/dumbbell_K", |b| {
        b.iter(|| enumerate_cells(&g, black_box(&k), &caps).unwrap())
    });
}

criterion_group!(benches, rank, dhar, cells);
criterion_main!(benches);
