use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use morphseg_bench::{corpus, model, segmentation_pairs};
use morphseg_core::autodiff::{Tape, Tensor};
use morphseg_core::evaluation::border_f1;
use morphseg_core::model::{max_decode_len, ModelDims};
use morphseg_core::training::{train_step, AdadeltaState};

fn matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for n in [20, 100, 300] {
        let a = Tensor::filled(&[20, n], 0.5);
        let b = Tensor::filled(&[n, 100], 0.25);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| {
                let mut tape = Tape::new();
                let x = tape.leaf(a.clone());
                let y = tape.leaf(b.clone());
                black_box(tape.matmul(x, y).unwrap());
            })
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_step");
    group.sample_size(10);
    for d in [32, 100] {
        let dims = ModelDims {
            embed: if d == 100 { 300 } else { d },
            hidden: d,
            attention: d,
        };
        let (vocab, mut params) = model(dims);
        let ds = corpus();
        let encoded: Vec<_> = (0..20).map(|i| vocab.encode(&ds.examples[i % ds.len()])).collect();
        let batch: Vec<_> = encoded.iter().collect();
        let mut state = AdadeltaState::new(params.params());
        group.bench_with_input(BenchmarkId::new("hidden", d), &d, |bench, _| {
            bench.iter(|| train_step(&mut params, &vocab, &batch, &mut state, 0.95, 1e-6).unwrap())
        });
    }
    group.finish();
}

fn decode(c: &mut Criterion) {
    let (vocab, params) = model(ModelDims::default());
    let ds = corpus();
    let sources: Vec<Vec<usize>> = ds.examples.iter().map(|e| vocab.encode(e).source).collect();
    let refs: Vec<&[usize]> = sources.iter().map(Vec::as_slice).collect();
    let limits: Vec<usize> = ds.examples.iter().map(|e| max_decode_len(e.source.chars().count())).collect();
    c.bench_function("greedy_decode_batch", |b| {
        b.iter(|| black_box(params.greedy_decode_batch(&vocab, &refs, &limits).unwrap()))
    });
}

fn metrics(c: &mut Criterion) {
    let (preds, golds) = segmentation_pairs(1000);
    c.bench_function("border_f1_1000", |b| b.iter(|| black_box(border_f1(&preds, &golds).unwrap())));
}

criterion_group!(benches, matmul, step, decode, metrics);
criterion_main!(benches);
