//! Sequential vs data-parallel scoring. With `--no-default-features` both
//! variants run sequentially.

use std::hint::black_box;

use clue_core::clue::clue;
use clue_core::exec::{self, ExecMode};
use clue_core::model::ClassModel;
use clue_core::optimizer::{PreparedPairs, RatedPair};
use clue_core::semantics::LexicalSimilarity;
use clue_core::synth::{mutate, random_model, ModelShape};
use clue_core::weights::ClueConfig;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pairs(count: usize) -> Vec<(ClassModel, ClassModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    (0..count)
        .map(|_| {
            let r = random_model(&mut rng, &ModelShape::MEDIUM);
            let intensity = rng.random_range(0.0..1.0);
            let c = mutate(&mut rng, &r, intensity);
            (r, c)
        })
        .collect()
}

const MODES: [(&str, ExecMode); 2] = [("sequential", ExecMode::Sequential), ("parallel", ExecMode::Parallel)];

fn batch_scoring(c: &mut Criterion) {
    let data = pairs(200);
    let config = ClueConfig::default();
    let mut group = c.benchmark_group("batch_scoring");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::new(name, data.len()), &data, |b, data| {
            b.iter(|| {
                exec::map_collect(mode, data, |(r, c)| clue(r, c, &LexicalSimilarity, &config).unwrap().clue)
            })
        });
    }
    group.finish();
}

fn objective(c: &mut Criterion) {
    let rated: Vec<RatedPair> = pairs(200)
        .into_iter()
        .enumerate()
        .map(|(i, (r, c))| RatedPair::new(r, c, (i % 100) as f64))
        .collect();
    let config = ClueConfig::bundled_uniform();
    let mut group = c.benchmark_group("objective");
    for (name, mode) in MODES {
        let prepared = PreparedPairs::new(&rated, &LexicalSimilarity, ExecMode::Parallel).unwrap().with_mode(mode);
        group.bench_function(BenchmarkId::new(name, rated.len()), |b| {
            b.iter(|| prepared.objective(black_box(&config)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, batch_scoring, objective);
criterion_main!(benches);
