use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sentrep::numeric::{dot, seeded_rng, softmax_in_place, Matrix};

fn softmax(c: &mut Criterion) {
    let mut group = c.benchmark_group("softmax");
    for n in [1_000usize, 20_000] {
        let scores: Vec<f32> = (0..n).map(|i| (i % 97) as f32 * 0.01).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &scores, |b, s| {
            b.iter(|| {
                let mut v = s.clone();
                black_box(softmax_in_place(&mut v))
            })
        });
    }
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let mut rng = seeded_rng(1);
    let m: Matrix<f32> = Matrix::uniform(20_000, 100, 0.1, &mut rng);
    let h = vec![0.5f32; 100];
    c.bench_function("score_all_rows_20k_x_100", |b| {
        b.iter(|| (0..m.rows()).map(|j| dot(m.row(j), &h)).fold(0.0f32, |a, v| a + v))
    });
}

criterion_group!(benches, softmax, scoring);
criterion_main!(benches);
