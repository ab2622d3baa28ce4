//! Benchmark bodies, kept in a library so they can be reused by other
//! harnesses.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use privmax::applications::{itemset_quality, BasketDataset};
use privmax::{
    exponential_mechanism, large_margin_mechanism, max_of_laplaces, search_thresholds, NoiseSource,
    PrivacyBudget, QualityUniverse,
};

/// All-ones instance over `k` items: item 1 scores 1, the rest 0.
fn all_ones(k: u64, n: u64) -> QualityUniverse {
    QualityUniverse::sparse_ranked(k, n, vec![1.0], 0.0).expect("valid instance")
}

fn dense_ramp(k: u64, n: u64) -> QualityUniverse {
    QualityUniverse::dense(n, (0..k).map(|i| 1.0 - i as f64 / k as f64).collect())
        .expect("valid instance")
}

pub fn mechanisms(c: &mut Criterion) {
    let budget = PrivacyBudget::approximate(1.0, 0.05).unwrap();
    let mut group = c.benchmark_group("select");
    for k in [100u64, 1_000_000, 1 << 40] {
        let u = all_ones(k, 500);
        let mut src = NoiseSource::seeded(1);
        group.bench_with_input(BenchmarkId::new("lmm_sparse", k), &u, |b, u| {
            b.iter(|| large_margin_mechanism(black_box(u), &budget, &mut src, None).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("em_sparse", k), &u, |b, u| {
            b.iter(|| exponential_mechanism(black_box(u), 1.0, &mut src).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("mol_sparse", k), &u, |b, u| {
            b.iter(|| max_of_laplaces(black_box(u), 1.0, &mut src).unwrap())
        });
    }
    for k in [100u64, 10_000] {
        let u = dense_ramp(k, 500);
        let mut src = NoiseSource::seeded(2);
        group.bench_with_input(BenchmarkId::new("lmm_dense", k), &u, |b, u| {
            b.iter(|| large_margin_mechanism(black_box(u), &budget, &mut src, None).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("em_dense", k), &u, |b, u| {
            b.iter(|| exponential_mechanism(black_box(u), 1.0, &mut src).unwrap())
        });
    }
    group.finish();
}

pub fn thresholds(c: &mut Criterion) {
    let budget = PrivacyBudget::approximate(1.0, 0.05).unwrap();
    c.bench_function("search_thresholds_1000", |b| {
        b.iter(|| search_thresholds(black_box(500), &budget, 1000).unwrap())
    });
}

pub fn itemsets(c: &mut Criterion) {
    let baskets: Vec<Vec<String>> = (0..2000u32)
        .map(|i| {
            (0..6)
                .map(|j| format!("t{}", (i * 7 + j * 13) % 60))
                .collect()
        })
        .collect();
    let data = BasketDataset::from_baskets(baskets).unwrap();
    c.bench_function("itemset_quality_pairs_2000", |b| {
        b.iter(|| itemset_quality(black_box(&data), 2).unwrap())
    });
}

pub fn benchmarks(c: &mut Criterion) {
    mechanisms(c);
    thresholds(c);
    itemsets(c);
}
