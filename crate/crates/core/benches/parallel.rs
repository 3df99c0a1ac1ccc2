use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvs_core::domain::{evaluate, GroundTruth, QaType, SegmentSet};
use tvs_core::isodata::{isodata_cluster_with, EmbeddingMatrix, IsodataParams};
use tvs_core::ExecMode;

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn embeddings(n: usize, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f32>> = (0..12).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let data = (0..n)
        .flat_map(|i| {
            let c = &centers[i % centers.len()];
            c.iter().map(|&v| v + rng.random_range(-0.2..0.2)).collect::<Vec<f32>>()
        })
        .collect();
    EmbeddingMatrix::new(n, dim, data).unwrap()
}

fn segments(rng: &mut ChaCha8Rng) -> SegmentSet {
    let pairs: Vec<(f64, f64)> = (0..3)
        .map(|_| {
            let s = rng.random_range(0.0..90.0);
            (s, s + rng.random_range(1.0..10.0))
        })
        .collect();
    SegmentSet::from_pairs(&pairs).unwrap()
}

fn bench_isodata(c: &mut Criterion) {
    let mut g = c.benchmark_group("isodata");
    g.sample_size(10);
    for n in [256, 1024] {
        let x = embeddings(n, 64, 7);
        let p = IsodataParams { k_init: 16, k_max: 48, ..IsodataParams::default() }.fitted_to(n);
        for (name, mode) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &x, |b, x| {
                b.iter(|| isodata_cluster_with(black_box(x), &p, mode).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_evaluate(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 20_000;
    let mut gts = BTreeMap::new();
    let mut preds = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("item{i:06}");
        gts.insert(id.clone(), GroundTruth { qa_type: QaType::ALL[i % 9], segments: segments(&mut rng) });
        preds.push((id, segments(&mut rng)));
    }
    let mut g = c.benchmark_group("evaluate");
    for (name, mode) in MODES {
        g.bench_function(name, |b| b.iter(|| evaluate(black_box(&preds), &gts, mode).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench_isodata, bench_evaluate);
criterion_main!(benches);
