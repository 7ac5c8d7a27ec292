use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use std::hint::black_box;

use gmner_bench::{completion_for, rng, sample, triples};
use gmner_core::{
    group_advantages, iou, match_entities, parse_completion, score_completion, BBox,
    ReasoningStyle, RewardConfig, RewardGroup,
};

fn bench_iou(c: &mut Criterion) {
    let a = BBox::new(405.0, 216.0, 558.0, 324.0).unwrap();
    let b = BBox::new(380.0, 200.0, 520.0, 340.0).unwrap();
    c.bench_function("iou", |bench| {
        bench.iter(|| iou(black_box(&a), black_box(&b)).unwrap())
    });
}

fn bench_match_entities(c: &mut Criterion) {
    let mut group = c.benchmark_group("match_entities");
    for n in [4usize, 8, 16] {
        let mut r = rng(1);
        let preds = triples(&mut r, n);
        let golds = triples(&mut r, n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| match_entities(black_box(&preds), black_box(&golds)))
        });
    }
    group.finish();
}

fn bench_parse_completion(c: &mut Criterion) {
    let mut r = rng(2);
    let s = sample(&mut r, "bench", 6);
    let completion = completion_for(&mut r, &s);
    c.bench_function("parse_completion", |bench| {
        bench.iter(|| parse_completion(black_box(&completion), ReasoningStyle::Formal))
    });
}

fn bench_score_completion(c: &mut Criterion) {
    let mut r = rng(3);
    let s = sample(&mut r, "bench", 6);
    let completion = completion_for(&mut r, &s);
    let config = RewardConfig::default();
    c.bench_function("score_completion", |bench| {
        bench.iter(|| {
            score_completion(
                black_box(&completion),
                ReasoningStyle::Formal,
                black_box(&s),
                &config,
            )
        })
    });
}

fn bench_group_advantages(c: &mut Criterion) {
    let mut r = rng(4);
    let rewards: Vec<f64> = (0..64)
        .map(|_| r.random_range(0..1000) as f64 / 1000.0)
        .collect();
    let group = RewardGroup::new(rewards).unwrap();
    c.bench_function("group_advantages_64", |bench| {
        bench.iter(|| group_advantages(black_box(&group)))
    });
}

criterion_group!(
    benches,
    bench_iou,
    bench_match_entities,
    bench_parse_completion,
    bench_score_completion,
    bench_group_advantages
);
criterion_main!(benches);
