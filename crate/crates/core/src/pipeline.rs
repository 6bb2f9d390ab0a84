//! End-to-end run: extract → cluster → train → tune λ → evaluate.

use log::info;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    initial_classification, run_exchange, Criterion, ExchangeConfig, ExchangeResult, InitPolicy, SweepPolicy,
};
use crate::corpus::{TagClassifier, TaggedToken};
use crate::counts::{encode_corpus, GridPolicy, PairCorpus};
use crate::error::Result;
use crate::evaluation::{
    common_events, compare_report, perplexity, split_corpus, tune_lambda, Comparison, LambdaSearch, PerplexityReport,
    Split, SplitConfig,
};
use crate::exec::Execution;
use crate::extractor::{extract_pairs, select_training_pairs, NounRole, PairMode, PairRecord};
use crate::model::{
    map_rare_to_unk, BPolicy, ClusterBigramModel, InterpolatedModel, ModelOptions, OovPolicy, Scorer, UnigramModel,
};

pub const UNIGRAM: &str = "uni-gram";
pub const VERB_OBJECT: &str = "clustered verb-object";
pub const BIGRAM: &str = "clustered bigram";
pub const COMBINED: &str = "combined model";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub noun_prefixes: Vec<String>,
    pub clusters_x: usize,
    pub clusters_y: usize,
    pub min_count: u64,
    pub criterion: Criterion,
    pub max_iterations: usize,
    pub sweep_policy: SweepPolicy,
    pub init: InitPolicy,
    pub grid: GridPolicy,
    pub b_policy: BPolicy,
    pub strict: bool,
    pub lambda_points: usize,
    pub split: SplitConfig,
    pub oov: OovPolicy,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            noun_prefixes: vec!["nn".into()],
            clusters_x: 50,
            clusters_y: 50,
            min_count: 5,
            criterion: Criterion::lo(),
            max_iterations: 20,
            sweep_policy: SweepPolicy::PerWord,
            init: InitPolicy::Frequency,
            grid: GridPolicy::NonEmpty,
            b_policy: BPolicy::Estimated,
            strict: false,
            lambda_points: 50,
            split: SplitConfig::default(),
            oov: OovPolicy::Skip,
            execution: Execution::default(),
        }
    }
}

impl PipelineConfig {
    pub fn classifier(&self) -> TagClassifier {
        TagClassifier::with_noun_prefixes(self.noun_prefixes.iter().cloned())
    }

    pub fn exchange_config(&self) -> ExchangeConfig {
        ExchangeConfig {
            max_clusters_x: self.clusters_x,
            max_clusters_y: self.clusters_y,
            min_count: self.min_count,
            max_iterations: self.max_iterations,
            sweep_policy: self.sweep_policy,
            grid: self.grid,
            execution: self.execution,
        }
    }

    pub fn model_options(&self) -> ModelOptions {
        ModelOptions { b_policy: self.b_policy, strict: self.strict, grid: self.grid }
    }

    /// Applies the OOV policy to training pairs.
    pub fn prepare_pairs(&self, pairs: Vec<(String, String)>) -> Vec<(String, String)> {
        match self.oov {
            OovPolicy::Skip => pairs,
            OovPolicy::Unk { min_count } => map_rare_to_unk(&pairs, min_count),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Clustered {
    pub corpus: PairCorpus,
    pub exchange: ExchangeResult,
}

pub fn cluster_pairs(pairs: &[(String, String)], config: &PipelineConfig) -> Result<Clustered> {
    let corpus = encode_corpus(pairs);
    let init = initial_classification(&corpus, config.clusters_x, config.clusters_y, config.init)?;
    let exchange = run_exchange(&corpus, &config.exchange_config(), config.criterion, init)?;
    Ok(Clustered { corpus, exchange })
}

#[derive(Debug, Clone)]
pub struct ModelStage {
    pub pairs: Vec<(String, String)>,
    pub exchange: ExchangeResult,
    pub model: ClusterBigramModel,
}

fn train_stage(train: &[PairRecord], mode: PairMode, config: &PipelineConfig) -> Result<ModelStage> {
    let pairs = config.prepare_pairs(select_training_pairs(train, mode));
    let Clustered { corpus, exchange } = cluster_pairs(&pairs, config)?;
    info!(
        "{mode}: {} pairs, {}x{} words, score {:.3} after {} sweeps",
        pairs.len(),
        corpus.x_vocab.len(),
        corpus.y_vocab.len(),
        exchange.final_score(),
        exchange.trace.len() - 1
    );
    let model = ClusterBigramModel::fit(corpus, exchange.classification.clone(), mode, config.model_options())?;
    Ok(ModelStage { pairs, exchange, model })
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub records: Vec<PairRecord>,
    pub split: Split<PairRecord>,
    pub verb_object: ModelStage,
    pub bigram: ModelStage,
    pub unigram: UnigramModel,
    pub lambda: LambdaSearch,
    pub reports: Vec<PerplexityReport>,
    pub comparison: Comparison,
}

impl PipelineOutput {
    pub fn report(&self, name: &str) -> Option<&PerplexityReport> {
        self.reports.iter().find(|r| r.model == name)
    }

    pub fn interpolated(&self) -> InterpolatedModel<&ClusterBigramModel, &ClusterBigramModel> {
        InterpolatedModel::new(self.lambda.lambda, &self.verb_object.model, &self.bigram.model)
            .expect("tuned lambda lies inside (0,1)")
    }
}

/// Direct-object records that carry both predictors, in text order.
pub fn aligned_records(records: &[PairRecord]) -> Vec<PairRecord> {
    records.iter().filter(|r| r.role == NounRole::DirectObject && r.prev_word.is_some()).cloned().collect()
}

pub fn run_pipeline(tokens: &[TaggedToken], config: &PipelineConfig) -> Result<PipelineOutput> {
    let records = extract_pairs(tokens, &config.classifier());
    let aligned = aligned_records(&records);
    let split = split_corpus(&aligned, &config.split)?;
    info!(
        "{} aligned records: {}/{}/{} train/dev/test",
        aligned.len(),
        split.train.len(),
        split.dev.len(),
        split.test.len()
    );

    let verb_object = train_stage(&split.train, PairMode::VerbObject, config)?;
    let bigram = train_stage(&split.train, PairMode::Bigram, config)?;
    let unigram = UnigramModel::fit(verb_object.pairs.iter().map(|(_, y)| y))?;

    let lambda = tune_lambda(&verb_object.model, &bigram.model, &split.dev, config.lambda_points, config.execution)?;
    info!("lambda = {:.4}", lambda.lambda);
    let combined = InterpolatedModel::new(lambda.lambda, &verb_object.model, &bigram.model)?;

    let scorers: [(&str, &dyn Scorer); 4] =
        [(UNIGRAM, &unigram), (VERB_OBJECT, &verb_object.model), (BIGRAM, &bigram.model), (COMBINED, &combined)];
    let all: Vec<&dyn Scorer> = scorers.iter().map(|(_, s)| *s).collect();
    let events = common_events(&split.test, &all, config.execution);
    let skipped = split.test.len() - events.len();
    let mut reports = Vec::new();
    for (name, scorer) in scorers {
        let mut r = perplexity(name, &scorer, &events, config.execution)?;
        r.skipped = skipped;
        reports.push(r);
    }
    let comparison = compare_report(&reports, UNIGRAM)?;
    Ok(PipelineOutput { records, split, verb_object, bigram, unigram, lambda, reports, comparison })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_tagged, SynthConfig};

    #[test]
    fn small_run_is_deterministic_and_ordered() {
        let tokens = generate_tagged(&SynthConfig { sentences: 3000, ..Default::default() });
        let config = PipelineConfig { clusters_x: 10, clusters_y: 10, ..Default::default() };
        let a = run_pipeline(&tokens, &config).unwrap();
        let b = run_pipeline(&tokens, &PipelineConfig { execution: Execution::Sequential, ..config.clone() }).unwrap();
        assert_eq!(a.comparison.to_tsv(), b.comparison.to_tsv());
        let pp = |n: &str| a.report(n).unwrap().perplexity;
        assert!(pp(UNIGRAM) > pp(VERB_OBJECT));
        assert!(pp(UNIGRAM) > pp(BIGRAM));
        assert_eq!(a.split.test.len(), 750);
    }
}
