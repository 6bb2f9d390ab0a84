//! Corpus splitting, perplexity, interpolation-weight search and the
//! model comparison table.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, pairwise_sum, Execution};
use crate::extractor::PairRecord;
use crate::model::{mix, Scorer};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train_fraction: f64,
    /// Fraction of the training portion held back as dev data, taken
    /// from its tail.
    pub dev_fraction: f64,
    /// Shuffle with this seed before splitting; contiguous otherwise.
    pub shuffle_seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { train_fraction: 0.75, dev_fraction: 0.05, shuffle_seed: None }
    }
}

pub fn split_corpus<T: Clone>(items: &[T], config: &SplitConfig) -> Result<Split<T>> {
    let SplitConfig { train_fraction, dev_fraction, shuffle_seed } = *config;
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(Error::Config(format!("train fraction must lie in (0,1], got {train_fraction}")));
    }
    if !(0.0..1.0).contains(&dev_fraction) {
        return Err(Error::Config(format!("dev fraction must lie in [0,1), got {dev_fraction}")));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let n = items.len();
    let n_train_all = ((n as f64) * train_fraction).floor() as usize;
    let n_dev = ((n_train_all as f64) * dev_fraction).round() as usize;
    let n_train = n_train_all - n_dev;
    if n_train == 0 {
        return Err(Error::EmptyPartition("train"));
    }
    if n_dev == 0 && dev_fraction > 0.0 {
        return Err(Error::EmptyPartition("dev"));
    }
    if n_train_all == n {
        return Err(Error::EmptyPartition("test"));
    }
    let pick = |r: std::ops::Range<usize>| order[r].iter().map(|&i| items[i].clone()).collect();
    Ok(Split { train: pick(0..n_train), dev: pick(n_train..n_train_all), test: pick(n_train_all..n) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub model: String,
    pub events: usize,
    pub skipped: usize,
    /// Natural-log likelihood of the scored events.
    pub log_likelihood: f64,
    pub perplexity: f64,
}

impl PerplexityReport {
    /// Percent reduction relative to `baseline`.
    pub fn reduction_vs(&self, baseline: &PerplexityReport) -> f64 {
        100.0 * (1.0 - self.perplexity / baseline.perplexity)
    }
}

fn describe(r: &PairRecord) -> String {
    r.to_string().replace('\t', " ")
}

pub fn perplexity<S: Scorer>(
    name: &str,
    model: &S,
    events: &[PairRecord],
    exec: Execution,
) -> Result<PerplexityReport> {
    let probs = exec::map_slice(exec, events, |r| model.score(r));
    let mut logs = Vec::with_capacity(probs.len());
    let mut skipped = 0;
    for (i, p) in probs.into_iter().enumerate() {
        match p {
            None => skipped += 1,
            Some(p) if p > 0.0 && p.is_finite() => logs.push(p.ln()),
            Some(p) => return Err(Error::ZeroProbability { index: i, event: describe(&events[i]), prob: p }),
        }
    }
    if logs.is_empty() {
        return Err(Error::EmptyPartition("scorable events"));
    }
    let log_likelihood = pairwise_sum(&logs);
    Ok(PerplexityReport {
        model: name.to_string(),
        events: logs.len(),
        skipped,
        log_likelihood,
        perplexity: (-log_likelihood / logs.len() as f64).exp(),
    })
}

/// Events every model can score, in original order.
pub fn common_events(events: &[PairRecord], models: &[&dyn Scorer], exec: Execution) -> Vec<PairRecord> {
    let keep = exec::map_slice(exec, events, |r| models.iter().all(|m| m.score(r).is_some()));
    events.iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r.clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSearch {
    pub lambda: f64,
    pub log_likelihood: f64,
    /// `(λ, dev log-likelihood)` for every grid point.
    pub grid: Vec<(f64, f64)>,
    pub events: usize,
}

/// Searches `λ = k / (points + 1)`, `k = 1..=points`, for the best dev
/// log-likelihood of `λ p_a + (1 - λ) p_b`; ties go to the smaller `λ`.
/// Events either model cannot score are ignored.
pub fn tune_lambda<A: Scorer, B: Scorer>(
    model_a: &A,
    model_b: &B,
    dev: &[PairRecord],
    points: usize,
    exec: Execution,
) -> Result<LambdaSearch> {
    if points == 0 {
        return Err(Error::Config("lambda grid needs at least one point".into()));
    }
    let pairs: Vec<(f64, f64)> =
        exec::map_slice(exec, dev, |r| Some((model_a.score(r)?, model_b.score(r)?))).into_iter().flatten().collect();
    if pairs.is_empty() {
        return Err(Error::EmptyPartition("dev events"));
    }
    let grid = exec::map_range(exec, points, |k| {
        let lambda = (k + 1) as f64 / (points + 1) as f64;
        let logs: Vec<f64> = pairs.iter().map(|&(a, b)| mix(lambda, a, b).ln()).collect();
        (lambda, pairwise_sum(&logs))
    });
    let mut best = grid[0];
    for &(l, ll) in &grid[1..] {
        if ll > best.1 {
            best = (l, ll);
        }
    }
    Ok(LambdaSearch { lambda: best.0, log_likelihood: best.1, grid, events: pairs.len() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub model: String,
    pub perplexity: f64,
    pub reduction: f64,
    pub events: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_report(reports: &[PerplexityReport], baseline: &str) -> Result<Comparison> {
    let base =
        reports.iter().find(|r| r.model == baseline).ok_or_else(|| Error::UnknownBaseline(baseline.to_string()))?;
    let rows = reports
        .iter()
        .map(|r| ComparisonRow {
            model: r.model.clone(),
            perplexity: r.perplexity,
            reduction: r.reduction_vs(base),
            events: r.events,
            skipped: r.skipped,
        })
        .collect();
    Ok(Comparison { baseline: baseline.to_string(), rows })
}

impl Comparison {
    pub fn to_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.model.len()).max().unwrap_or(0).max("Model".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<w$}  {:>12}  {:>11}  {:>8}  {:>7}",
            "Model", "Perplexity", "% Reduction", "Events", "Skipped"
        );
        let _ = writeln!(out, "{}", "-".repeat(w + 2 + 12 + 2 + 11 + 2 + 8 + 2 + 7));
        for r in &self.rows {
            let red = if r.model == self.baseline { "not appl.".to_string() } else { format!("{:.1}%", r.reduction) };
            let _ = writeln!(
                out,
                "{:<w$}  {:>12.2}  {:>11}  {:>8}  {:>7}",
                r.model, r.perplexity, red, r.events, r.skipped
            );
        }
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("model\tperplexity\treduction_percent\tevents\tskipped\n");
        for r in &self.rows {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", r.model, r.perplexity, r.reduction, r.events, r.skipped);
        }
        out
    }
}
