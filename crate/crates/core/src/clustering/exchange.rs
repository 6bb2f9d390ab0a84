use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::counts::{Classification, CountTable, GridPolicy, PairCorpus, Side, WordPairCounts};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

use super::{move_delta_counted, Criterion};

/// Moves must beat this to count as improving; absorbs rounding noise.
const MIN_IMPROVEMENT: f64 = 1e-9;

/// Below this many profile cells per word, target evaluation stays on one thread.
const PARALLEL_MIN_WORK: u64 = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepPolicy {
    /// Each visited word takes its own best improving move.
    #[default]
    PerWord,
    /// Each iteration applies only the single best move over all words.
    GlobalBest,
}

impl FromStr for SweepPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-word" => Ok(SweepPolicy::PerWord),
            "global-best" => Ok(SweepPolicy::GlobalBest),
            other => Err(Error::Config(format!("unknown sweep policy `{other}`"))),
        }
    }
}

impl fmt::Display for SweepPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepPolicy::PerWord => "per-word",
            SweepPolicy::GlobalBest => "global-best",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitPolicy {
    /// The M-1 most frequent words get singleton clusters, the rest share one.
    #[default]
    Frequency,
    /// Words in frequency order are dealt to clusters round-robin.
    RoundRobin,
}

impl FromStr for InitPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(InitPolicy::Frequency),
            "round-robin" => Ok(InitPolicy::RoundRobin),
            other => Err(Error::Config(format!("unknown init policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeConfig {
    pub max_clusters_x: usize,
    pub max_clusters_y: usize,
    /// Words seen fewer times than this are never moved.
    pub min_count: u64,
    pub max_iterations: usize,
    pub sweep_policy: SweepPolicy,
    pub grid: GridPolicy,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        ExchangeConfig {
            max_clusters_x: 50,
            max_clusters_y: 50,
            min_count: 5,
            max_iterations: 20,
            sweep_policy: SweepPolicy::PerWord,
            grid: GridPolicy::NonEmpty,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    pub sweep: usize,
    pub score: f64,
    pub moves: usize,
    /// Candidate moves evaluated.
    pub evaluations: u64,
    /// Count cells touched, including profile construction.
    pub work: u64,
}

#[derive(Debug, Clone)]
pub struct ExchangeResult {
    pub classification: Classification,
    pub table: CountTable,
    /// Entry 0 is the initial classification.
    pub trace: Vec<SweepStats>,
    pub converged: bool,
}

impl ExchangeResult {
    pub fn final_score(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |s| s.score)
    }
}

/// An applied move, reported to observers after the table is updated.
#[derive(Debug, Clone, Copy)]
pub struct MoveEvent {
    pub side: Side,
    pub word: usize,
    pub from: usize,
    pub to: usize,
    pub delta: f64,
}

pub fn initial_classification(corpus: &PairCorpus, mx: usize, my: usize, policy: InitPolicy) -> Result<Classification> {
    let g1 = init_side(corpus, Side::X, mx, policy);
    let g2 = init_side(corpus, Side::Y, my, policy);
    Classification::new(g1, g2, mx, my)
}

fn init_side(corpus: &PairCorpus, side: Side, m: usize, policy: InitPolicy) -> Vec<usize> {
    let vocab = corpus.vocab(side);
    let order = frequency_order(vocab.counts().collect::<Vec<_>>().as_slice());
    let mut out = vec![0; vocab.len()];
    match policy {
        InitPolicy::RoundRobin => {
            for (rank, &w) in order.iter().enumerate() {
                out[w] = rank % m;
            }
        }
        InitPolicy::Frequency => {
            // singletons only for words seen at least twice, so no cluster
            // starts with count 1
            let seeded: Vec<usize> = order.iter().copied().filter(|&w| vocab.count(w) >= 2).take(m - 1).collect();
            let pool = m - 1;
            out.iter_mut().for_each(|c| *c = pool);
            for (i, &w) in seeded.iter().enumerate() {
                out[w] = i;
            }
            let pooled: u64 = out.iter().zip(vocab.counts()).filter(|(&c, _)| c == pool).map(|(_, n)| n).sum();
            if pooled == 1 && !seeded.is_empty() {
                let last = seeded.len() - 1;
                out.iter_mut().filter(|c| **c == pool).for_each(|c| *c = last);
            }
        }
    }
    out
}

/// Word ids by descending count, ties by id.
fn frequency_order(counts: &[u64]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..counts.len()).collect();
    ids.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    ids
}

pub fn run_exchange(
    corpus: &PairCorpus,
    config: &ExchangeConfig,
    criterion: Criterion,
    init: Classification,
) -> Result<ExchangeResult> {
    run_exchange_observed(corpus, config, criterion, init, |_, _| {})
}

/// [`run_exchange`] with a callback invoked after every applied move.
pub fn run_exchange_observed<F>(
    corpus: &PairCorpus,
    config: &ExchangeConfig,
    criterion: Criterion,
    init: Classification,
    mut observer: F,
) -> Result<ExchangeResult>
where
    F: FnMut(&MoveEvent, &CountTable),
{
    criterion.validate()?;
    if config.max_iterations == 0 {
        return Err(Error::Config("max_iterations must be positive".into()));
    }
    if matches!(criterion, Criterion::Lo { .. }) && config.min_count < 2 {
        return Err(Error::Config("leaving-one-out clustering needs min_count >= 2".into()));
    }
    if init.num_clusters(Side::X) != config.max_clusters_x || init.num_clusters(Side::Y) != config.max_clusters_y {
        return Err(Error::InvalidClassification(format!(
            "initial classification has {}x{} clusters, config asks for {}x{}",
            init.num_clusters(Side::X),
            init.num_clusters(Side::Y),
            config.max_clusters_x,
            config.max_clusters_y
        )));
    }
    let words = Arc::new(WordPairCounts::from_corpus(corpus));
    if init.assignments(Side::X).len() != words.vocab_size(Side::X)
        || init.assignments(Side::Y).len() != words.vocab_size(Side::Y)
    {
        return Err(Error::InvalidClassification("initial classification does not cover the vocabulary".into()));
    }
    let mut g = init;
    let mut table = CountTable::build(words.clone(), &g, config.grid);
    if table.has_singleton_cluster() {
        return Err(Error::InvalidClassification("initial classification has a cluster with count 1".into()));
    }
    let initial = criterion.score(&table)?;
    let mut trace = vec![SweepStats { sweep: 0, score: initial, moves: 0, evaluations: 0, work: 0 }];

    let order = visit_order(&words, config.min_count);
    let mut converged = false;
    for sweep in 1..=config.max_iterations {
        let stats = match config.sweep_policy {
            SweepPolicy::PerWord => {
                per_word_sweep(&mut table, &mut g, &order, criterion, config.execution, &mut observer)?
            }
            SweepPolicy::GlobalBest => {
                global_best_step(&mut table, &mut g, &order, criterion, config.execution, &mut observer)?
            }
        };
        let score = criterion.score(&table)?;
        debug!("sweep {sweep}: score {score:.6}, {} moves", stats.0);
        trace.push(SweepStats { sweep, score, moves: stats.0, evaluations: stats.1, work: stats.2 });
        if stats.0 == 0 {
            converged = true;
            break;
        }
    }
    Ok(ExchangeResult { classification: g, table, trace, converged })
}

fn visit_order(words: &WordPairCounts, min_count: u64) -> Vec<(Side, usize)> {
    let mut order: Vec<(Side, usize, u64)> = [Side::X, Side::Y]
        .into_iter()
        .flat_map(|side| (0..words.vocab_size(side)).map(move |w| (side, w, words.word_count(side, w))))
        .filter(|&(_, _, c)| c >= min_count)
        .collect();
    let side_rank = |s: Side| (s == Side::Y) as u8;
    order.sort_by(|a, b| b.2.cmp(&a.2).then(side_rank(a.0).cmp(&side_rank(b.0))).then(a.1.cmp(&b.1)));
    order.into_iter().map(|(s, w, _)| (s, w)).collect()
}

struct Candidate {
    to: usize,
    delta: f64,
    evaluations: u64,
    work: u64,
}

/// Best target for one word; ties go to the lowest cluster id.
fn best_move(
    table: &CountTable,
    g: &Classification,
    side: Side,
    word: usize,
    criterion: Criterion,
    exec: Execution,
) -> Candidate {
    let from = g.cluster(side, word);
    let profile = table.profile(g, side, word);
    let m = g.num_clusters(side);
    let exec =
        if (m as u64) * (profile.entries.len() as u64 + 1) < PARALLEL_MIN_WORK { Execution::Sequential } else { exec };
    let deltas = exec::map_range(exec, m, |to| {
        if to == from {
            (f64::NEG_INFINITY, 0)
        } else {
            move_delta_counted(table, side, from, to, &profile, criterion)
        }
    });
    let mut best = Candidate {
        to: from,
        delta: f64::NEG_INFINITY,
        evaluations: (m - 1) as u64,
        work: table.words().neighbours(side, word).len() as u64,
    };
    for (to, (d, w)) in deltas.into_iter().enumerate() {
        best.work += w;
        if d > best.delta {
            best.delta = d;
            best.to = to;
        }
    }
    best
}

fn apply<F: FnMut(&MoveEvent, &CountTable)>(
    table: &mut CountTable,
    g: &mut Classification,
    side: Side,
    word: usize,
    cand: &Candidate,
    criterion: Criterion,
    observer: &mut F,
) -> Result<()> {
    let from = g.cluster(side, word);
    let before = if cfg!(debug_assertions) { Some(criterion.score(table)?) } else { None };
    table.apply_move(g, side, word, cand.to)?;
    if let Some(before) = before {
        let after = criterion.score(table)?;
        debug_assert!(after >= before - 1e-9 * before.abs().max(1.0), "score fell from {before} to {after}");
    }
    observer(&MoveEvent { side, word, from, to: cand.to, delta: cand.delta }, table);
    Ok(())
}

fn per_word_sweep<F: FnMut(&MoveEvent, &CountTable)>(
    table: &mut CountTable,
    g: &mut Classification,
    order: &[(Side, usize)],
    criterion: Criterion,
    exec: Execution,
    observer: &mut F,
) -> Result<(usize, u64, u64)> {
    let (mut moves, mut evaluations, mut work) = (0, 0, 0);
    for &(side, word) in order {
        let cand = best_move(table, g, side, word, criterion, exec);
        evaluations += cand.evaluations;
        work += cand.work;
        if cand.delta > MIN_IMPROVEMENT {
            apply(table, g, side, word, &cand, criterion, observer)?;
            moves += 1;
        }
    }
    Ok((moves, evaluations, work))
}

fn global_best_step<F: FnMut(&MoveEvent, &CountTable)>(
    table: &mut CountTable,
    g: &mut Classification,
    order: &[(Side, usize)],
    criterion: Criterion,
    exec: Execution,
    observer: &mut F,
) -> Result<(usize, u64, u64)> {
    let t: &CountTable = table;
    let gg: &Classification = g;
    let cands =
        exec::map_slice(exec, order, |&(side, word)| best_move(t, gg, side, word, criterion, Execution::Sequential));
    let (mut evaluations, mut work) = (0, 0);
    let mut best: Option<(usize, &Candidate)> = None;
    for (i, c) in cands.iter().enumerate() {
        evaluations += c.evaluations;
        work += c.work;
        if best.is_none_or(|(_, b)| c.delta > b.delta) {
            best = Some((i, c));
        }
    }
    match best {
        Some((i, cand)) if cand.delta > MIN_IMPROVEMENT => {
            let (side, word) = order[i];
            apply(table, g, side, word, cand, criterion, observer)?;
            Ok((1, evaluations, work))
        }
        _ => Ok((0, evaluations, work)),
    }
}

/// Writes `sweep<TAB>score<TAB>moves` lines.
pub fn write_trace<W: Write>(mut w: W, trace: &[SweepStats]) -> std::io::Result<()> {
    for s in trace {
        writeln!(w, "{}\t{}\t{}", s.sweep, s.score, s.moves)?;
    }
    Ok(())
}

/// Reads `(sweep, score, moves)` triples back from a trace file.
pub fn read_trace<R: BufRead>(reader: R) -> Result<Vec<(usize, f64, usize)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Parse { line: lineno, message: "expected sweep<TAB>score<TAB>moves".into() };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(bad());
        }
        out.push((
            f[0].parse().map_err(|_| bad())?,
            f[1].parse().map_err(|_| bad())?,
            f[2].parse().map_err(|_| bad())?,
        ));
    }
    Ok(out)
}
