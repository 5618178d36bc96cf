use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use drgossip_bench::{logistic_engine, random_vector};
use drgossip_core::objective::project_simplex;
use drgossip_core::rng::{stream, Purpose};
use drgossip_core::{CompressionKind, CompressionSpec};

fn compression(c: &mut Criterion) {
    let d = 7850;
    let x = random_vector(d, 3);
    for kind in [
        CompressionKind::RandQuant { bits: 4 },
        CompressionKind::RandQuant { bits: 16 },
        CompressionKind::TopK { k: d / 10 },
    ] {
        let q = CompressionSpec::new(kind, d).unwrap();
        let mut rng = stream(1, 0, 0, Purpose::Compress);
        c.bench_function(&format!("compress {q} d={d}"), |b| {
            b.iter(|| q.compress(black_box(&x), &mut rng))
        });
    }
}

fn projection(c: &mut Criterion) {
    for m in [10, 100] {
        let v = random_vector(m, 5);
        c.bench_function(&format!("project_simplex m={m}"), |b| {
            b.iter(|| project_simplex(black_box(&v)))
        });
    }
}

fn engine_round(c: &mut Criterion) {
    c.bench_function("adgda round m=10 d=102 quant:8", |b| {
        b.iter_batched(
            || logistic_engine(10, 50, CompressionKind::RandQuant { bits: 8 }, 1_000_000),
            |mut e| e.step().unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group!(benches, compression, projection, engine_round);
criterion_main!(benches);
