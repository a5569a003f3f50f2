use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use monoeval_bench::{synthetic_bleu_corpus, synthetic_corpus};
use monoeval_core::corpus::{filter_monotonic, score_corpus, FilterOptions};
use monoeval_core::quality::corpus_bleu;
use monoeval_core::{al, delays_from_log, waitk_path, Smoothing};

fn aa_scoring(c: &mut Criterion) {
    let mut group = c.benchmark_group("aa");
    for n in [1_000, 10_000] {
        let (pairs, alignments) = synthetic_corpus(n, 1);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("score_corpus", n), &n, |b, _| {
            b.iter(|| score_corpus(black_box(&pairs), black_box(&alignments)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("filter_monotonic", n), &n, |b, _| {
            b.iter(|| filter_monotonic(&pairs, &alignments, FilterOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn bleu(c: &mut Criterion) {
    let mut group = c.benchmark_group("bleu");
    for n in [100, 2_000] {
        let (hyps, refs) = synthetic_bleu_corpus(n, 2);
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("corpus_bleu", n), &n, |b, _| {
            b.iter(|| corpus_bleu(black_box(&hyps), black_box(&refs), Smoothing::Exp).unwrap())
        });
    }
    group.finish();
}

fn average_lagging(c: &mut Criterion) {
    let logs: Vec<_> = (1..=50).map(|k| waitk_path(50, 50, k).unwrap()).collect();
    c.bench_function("al/waitk_50x50_all_k", |b| {
        b.iter(|| {
            logs.iter()
                .map(|l| al(&delays_from_log(black_box(l)).unwrap()).unwrap())
                .sum::<f64>()
        })
    });
}

criterion_group!(benches, aa_scoring, bleu, average_lagging);
criterion_main!(benches);
