use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use selpref::clustering::{initial_classification, run_exchange, Criterion as Score, ExchangeConfig, InitPolicy};
use selpref::corpus::TagClassifier;
use selpref::counts::encode_corpus;
use selpref::evaluation::{perplexity, tune_lambda};
use selpref::exec::Execution;
use selpref::extractor::{extract_pairs, select_training_pairs, PairMode};
use selpref::model::{ClusterBigramModel, ModelOptions};
use selpref::pipeline::aligned_records;
use selpref::synth::{generate_tagged, SynthConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_exchange(c: &mut Criterion) {
    let tokens = generate_tagged(&SynthConfig { sentences: 20_000, ..Default::default() });
    let records = aligned_records(&extract_pairs(&tokens, &TagClassifier::default()));
    let corpus = encode_corpus(&select_training_pairs(&records, PairMode::VerbObject));

    let mut group = c.benchmark_group("exchange");
    group.sample_size(10);
    for m in [20, 50] {
        let init = initial_classification(&corpus, m, m, InitPolicy::Frequency).unwrap();
        for (name, execution) in MODES {
            let config = ExchangeConfig {
                max_clusters_x: m,
                max_clusters_y: m,
                max_iterations: 3,
                execution,
                ..Default::default()
            };
            group.bench_with_input(BenchmarkId::new(name, m), &init, |b, init| {
                b.iter(|| run_exchange(&corpus, &config, Score::lo(), init.clone()).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_evaluation(c: &mut Criterion) {
    let tokens = generate_tagged(&SynthConfig { sentences: 20_000, ..Default::default() });
    let records = aligned_records(&extract_pairs(&tokens, &TagClassifier::default()));
    let fit = |mode| {
        let corpus = encode_corpus(&select_training_pairs(&records, mode));
        let init = initial_classification(&corpus, 30, 30, InitPolicy::Frequency).unwrap();
        let config = ExchangeConfig { max_clusters_x: 30, max_clusters_y: 30, max_iterations: 3, ..Default::default() };
        let g = run_exchange(&corpus, &config, Score::lo(), init).unwrap().classification;
        ClusterBigramModel::fit(corpus, g, mode, ModelOptions::default()).unwrap()
    };
    let (vo, bigram) = (fit(PairMode::VerbObject), fit(PairMode::Bigram));

    let mut group = c.benchmark_group("evaluation");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new("perplexity", name), |b| {
            b.iter(|| perplexity("vo", &vo, black_box(&records), exec).unwrap())
        });
        group.bench_function(BenchmarkId::new("tune_lambda", name), |b| {
            b.iter(|| tune_lambda(&vo, &bigram, black_box(&records), 50, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_exchange, bench_evaluation);
criterion_main!(benches);
