//! Integer-coded pair corpora and the count statistics both clustering
//! criteria and the models are built from.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Predictor side (`X`, clustered by G1) or target side (`Y`, clustered by G2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    X,
    Y,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }
}

/// Which cluster pairs count as "unseen" for `n_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridPolicy {
    /// Only pairs of currently non-empty clusters.
    #[default]
    NonEmpty,
    /// All `Mx * My` pairs.
    Full,
}

impl fmt::Display for GridPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridPolicy::NonEmpty => "non-empty",
            GridPolicy::Full => "full",
        })
    }
}

impl FromStr for GridPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-empty" | "nonempty" => Ok(GridPolicy::NonEmpty),
            "full" => Ok(GridPolicy::Full),
            other => Err(Error::Config(format!("unknown grid policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PairCorpus {
    pub x_vocab: Vocabulary,
    pub y_vocab: Vocabulary,
    pub pairs: Vec<(usize, usize)>,
}

impl PairCorpus {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn vocab(&self, side: Side) -> &Vocabulary {
        match side {
            Side::X => &self.x_vocab,
            Side::Y => &self.y_vocab,
        }
    }
}

pub fn encode_corpus<S: AsRef<str>>(pairs: &[(S, S)]) -> PairCorpus {
    let mut corpus = PairCorpus::default();
    corpus.pairs.reserve(pairs.len());
    for (x, y) in pairs {
        let xi = corpus.x_vocab.add(x.as_ref(), 1);
        let yi = corpus.y_vocab.add(y.as_ref(), 1);
        corpus.pairs.push((xi, yi));
    }
    corpus
}

/// The two clustering functions: G1 over predictors, G2 over targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    g1: Vec<usize>,
    g2: Vec<usize>,
    mx: usize,
    my: usize,
}

impl Classification {
    pub fn new(g1: Vec<usize>, g2: Vec<usize>, mx: usize, my: usize) -> Result<Self> {
        if mx == 0 || my == 0 {
            return Err(Error::InvalidClassification("cluster counts must be positive".into()));
        }
        if let Some(c) = g1.iter().find(|&&c| c >= mx) {
            return Err(Error::InvalidClassification(format!("x cluster {c} out of range 0..{mx}")));
        }
        if let Some(c) = g2.iter().find(|&&c| c >= my) {
            return Err(Error::InvalidClassification(format!("y cluster {c} out of range 0..{my}")));
        }
        Ok(Classification { g1, g2, mx, my })
    }

    /// One cluster per side holding every word.
    pub fn single_cluster(nx: usize, ny: usize) -> Self {
        Classification { g1: vec![0; nx], g2: vec![0; ny], mx: 1, my: 1 }
    }

    pub fn cluster(&self, side: Side, word: usize) -> usize {
        match side {
            Side::X => self.g1[word],
            Side::Y => self.g2[word],
        }
    }

    pub fn num_clusters(&self, side: Side) -> usize {
        match side {
            Side::X => self.mx,
            Side::Y => self.my,
        }
    }

    pub fn assignments(&self, side: Side) -> &[usize] {
        match side {
            Side::X => &self.g1,
            Side::Y => &self.g2,
        }
    }

    pub(crate) fn set(&mut self, side: Side, word: usize, cluster: usize) {
        match side {
            Side::X => self.g1[word] = cluster,
            Side::Y => self.g2[word] = cluster,
        }
    }

    fn check_total(&self, corpus: &PairCorpus) -> Result<()> {
        if self.g1.len() != corpus.x_vocab.len() || self.g2.len() != corpus.y_vocab.len() {
            return Err(Error::InvalidClassification(format!(
                "classification covers {}/{} words but vocabularies have {}/{}",
                self.g1.len(),
                self.g2.len(),
                corpus.x_vocab.len(),
                corpus.y_vocab.len()
            )));
        }
        Ok(())
    }
}

/// Writes one side as `word<TAB>cluster_id` lines in vocabulary order.
pub fn write_classes<W: Write>(mut w: W, vocab: &Vocabulary, assignment: &[usize]) -> std::io::Result<()> {
    for (id, token, _) in vocab.iter() {
        writeln!(w, "{token}\t{}", assignment[id])?;
    }
    Ok(())
}

/// Reads one side of a classification file and aligns it to `vocab`.
pub fn read_classes<R: BufRead>(reader: R, vocab: &Vocabulary) -> Result<Vec<usize>> {
    let mut map = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if line.is_empty() {
            continue;
        }
        let (word, cluster) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse { line: lineno, message: "expected word<TAB>cluster".into() })?;
        let cluster: usize = cluster
            .trim()
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("bad cluster id `{cluster}`") })?;
        map.insert(word.to_string(), cluster);
    }
    vocab
        .iter()
        .map(|(_, token, _)| {
            map.get(token).copied().ok_or_else(|| Error::InvalidClassification(format!("no cluster for `{token}`")))
        })
        .collect()
}

/// Word-level co-occurrence lists. Independent of the classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPairCounts {
    /// `rows[x]` = (y, N(x,y)) for every y seen with x.
    rows: Vec<Vec<(usize, u64)>>,
    /// `cols[y]` = (x, N(x,y)).
    cols: Vec<Vec<(usize, u64)>>,
    n_x: Vec<u64>,
    n_y: Vec<u64>,
}

impl WordPairCounts {
    pub fn from_corpus(corpus: &PairCorpus) -> Self {
        let nx = corpus.x_vocab.len();
        let ny = corpus.y_vocab.len();
        let mut map: HashMap<(usize, usize), u64> = HashMap::new();
        let mut n_x = vec![0; nx];
        let mut n_y = vec![0; ny];
        for &(x, y) in &corpus.pairs {
            *map.entry((x, y)).or_default() += 1;
            n_x[x] += 1;
            n_y[y] += 1;
        }
        let mut entries: Vec<_> = map.into_iter().collect();
        entries.sort_unstable();
        let mut rows = vec![Vec::new(); nx];
        let mut cols = vec![Vec::new(); ny];
        for ((x, y), c) in entries {
            rows[x].push((y, c));
            cols[y].push((x, c));
        }
        WordPairCounts { rows, cols, n_x, n_y }
    }

    pub fn neighbours(&self, side: Side, word: usize) -> &[(usize, u64)] {
        match side {
            Side::X => &self.rows[word],
            Side::Y => &self.cols[word],
        }
    }

    pub fn word_count(&self, side: Side, word: usize) -> u64 {
        match side {
            Side::X => self.n_x[word],
            Side::Y => self.n_y[word],
        }
    }

    pub fn vocab_size(&self, side: Side) -> usize {
        match side {
            Side::X => self.n_x.len(),
            Side::Y => self.n_y.len(),
        }
    }

    pub fn pair_count(&self, x: usize, y: usize) -> u64 {
        self.rows[x].binary_search_by_key(&y, |&(yy, _)| yy).map_or(0, |i| self.rows[x][i].1)
    }

    pub fn distinct_pairs(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }
}

/// A word's co-occurrence with each cluster on the opposite side, as a
/// sparse list sorted by cluster id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Profile {
    pub entries: Vec<(usize, u64)>,
    pub word_count: u64,
}

/// Cluster-level statistics for a corpus under a classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    words: Arc<WordPairCounts>,
    mx: usize,
    my: usize,
    grid: GridPolicy,
    /// Dense `mx * my`, row-major by x cluster.
    cells: Vec<u64>,
    n_gx: Vec<u64>,
    n_gy: Vec<u64>,
    n_plus: u64,
    n_1: u64,
    n_2: u64,
    nonempty_x: usize,
    nonempty_y: usize,
    total: u64,
}

pub fn tabulate(corpus: &PairCorpus, g: &Classification) -> Result<CountTable> {
    tabulate_with(corpus, g, GridPolicy::default())
}

pub fn tabulate_with(corpus: &PairCorpus, g: &Classification, grid: GridPolicy) -> Result<CountTable> {
    g.check_total(corpus)?;
    Ok(CountTable::build(Arc::new(WordPairCounts::from_corpus(corpus)), g, grid))
}

impl CountTable {
    pub fn build(words: Arc<WordPairCounts>, g: &Classification, grid: GridPolicy) -> Self {
        let (mx, my) = (g.mx, g.my);
        let mut t = CountTable {
            words,
            mx,
            my,
            grid,
            cells: vec![0; mx * my],
            n_gx: vec![0; mx],
            n_gy: vec![0; my],
            n_plus: 0,
            n_1: 0,
            n_2: 0,
            nonempty_x: 0,
            nonempty_y: 0,
            total: 0,
        };
        for (x, row) in t.words.rows.iter().enumerate() {
            let gx = g.g1[x];
            for &(y, c) in row {
                t.cells[gx * my + g.g2[y]] += c;
            }
        }
        for (x, &c) in t.words.n_x.iter().enumerate() {
            t.n_gx[g.g1[x]] += c;
            t.total += c;
        }
        for (y, &c) in t.words.n_y.iter().enumerate() {
            t.n_gy[g.g2[y]] += c;
        }
        for &c in &t.cells {
            t.n_plus += (c > 0) as u64;
            t.n_1 += (c == 1) as u64;
            t.n_2 += (c == 2) as u64;
        }
        t.nonempty_x = t.n_gx.iter().filter(|&&c| c > 0).count();
        t.nonempty_y = t.n_gy.iter().filter(|&&c| c > 0).count();
        t
    }

    pub fn words(&self) -> &Arc<WordPairCounts> {
        &self.words
    }

    pub fn grid(&self) -> GridPolicy {
        self.grid
    }

    pub fn num_clusters(&self, side: Side) -> usize {
        match side {
            Side::X => self.mx,
            Side::Y => self.my,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn cell(&self, gx: usize, gy: usize) -> u64 {
        self.cells[gx * self.my + gy]
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn cluster_count(&self, side: Side, cluster: usize) -> u64 {
        match side {
            Side::X => self.n_gx[cluster],
            Side::Y => self.n_gy[cluster],
        }
    }

    pub fn cluster_counts(&self, side: Side) -> &[u64] {
        match side {
            Side::X => &self.n_gx,
            Side::Y => &self.n_gy,
        }
    }

    pub fn word_count(&self, side: Side, word: usize) -> u64 {
        self.words.word_count(side, word)
    }

    pub fn n_plus(&self) -> u64 {
        self.n_plus
    }

    pub fn n_1(&self) -> u64 {
        self.n_1
    }

    pub fn n_2(&self) -> u64 {
        self.n_2
    }

    pub fn nonempty(&self, side: Side) -> usize {
        match side {
            Side::X => self.nonempty_x,
            Side::Y => self.nonempty_y,
        }
    }

    pub fn grid_size(&self) -> u64 {
        grid_size(self.grid, self.mx, self.my, self.nonempty_x, self.nonempty_y)
    }

    pub fn n_0(&self) -> u64 {
        self.grid_size() - self.n_plus
    }

    /// Whether `(gx, gy)` belongs to the grid `n_0` is counted over.
    pub fn in_grid(&self, gx: usize, gy: usize) -> bool {
        match self.grid {
            GridPolicy::Full => true,
            GridPolicy::NonEmpty => self.n_gx[gx] > 0 && self.n_gy[gy] > 0,
        }
    }

    /// Whether any non-empty cluster has marginal count exactly 1.
    pub fn has_singleton_cluster(&self) -> bool {
        self.n_gx.iter().chain(&self.n_gy).any(|&c| c == 1)
    }

    pub fn profile(&self, g: &Classification, side: Side, word: usize) -> Profile {
        let other = side.other();
        let mut dense = vec![0u64; g.num_clusters(other)];
        for &(w, c) in self.words.neighbours(side, word) {
            dense[g.cluster(other, w)] += c;
        }
        Profile {
            entries: dense.into_iter().enumerate().filter(|&(_, c)| c > 0).collect(),
            word_count: self.words.word_count(side, word),
        }
    }

    /// Whether moving `count` tokens from `from` to `to` keeps every
    /// non-empty cluster at marginal ≥ 2.
    pub fn move_is_legal(&self, side: Side, from: usize, to: usize, count: u64) -> bool {
        let marg = self.cluster_counts(side);
        marg[from] - count != 1 && marg[to] + count != 1
    }

    pub fn apply_move(&mut self, g: &mut Classification, side: Side, word: usize, to: usize) -> Result<()> {
        let from = g.cluster(side, word);
        if to >= g.num_clusters(side) {
            return Err(Error::IllegalMove(format!("target cluster {to} out of range")));
        }
        if from == to {
            return Err(Error::IllegalMove(format!("word {word} is already in cluster {to}")));
        }
        let profile = self.profile(g, side, word);
        if !self.move_is_legal(side, from, to, profile.word_count) {
            return Err(Error::IllegalMove(format!(
                "moving word {word} from {from} to {to} leaves a cluster with count 1"
            )));
        }
        self.apply_profile(side, from, to, &profile);
        g.set(side, word, to);
        Ok(())
    }

    fn apply_profile(&mut self, side: Side, from: usize, to: usize, profile: &Profile) {
        for &(other, c) in &profile.entries {
            let (a, b) = match side {
                Side::X => (from * self.my + other, to * self.my + other),
                Side::Y => (other * self.my + from, other * self.my + to),
            };
            self.set_cell(a, self.cells[a] - c);
            self.set_cell(b, self.cells[b] + c);
        }
        let n = profile.word_count;
        let (marg, nonempty) = match side {
            Side::X => (&mut self.n_gx, &mut self.nonempty_x),
            Side::Y => (&mut self.n_gy, &mut self.nonempty_y),
        };
        if n > 0 {
            if marg[from] == n {
                *nonempty -= 1;
            }
            if marg[to] == 0 {
                *nonempty += 1;
            }
        }
        marg[from] -= n;
        marg[to] += n;
    }

    fn set_cell(&mut self, idx: usize, new: u64) {
        let old = self.cells[idx];
        let (dp, d1, d2) = (old > 0, old == 1, old == 2);
        self.n_plus -= dp as u64;
        self.n_1 -= d1 as u64;
        self.n_2 -= d2 as u64;
        self.n_plus += (new > 0) as u64;
        self.n_1 += (new == 1) as u64;
        self.n_2 += (new == 2) as u64;
        self.cells[idx] = new;
    }
}

pub(crate) fn grid_size(grid: GridPolicy, mx: usize, my: usize, ne_x: usize, ne_y: usize) -> u64 {
    match grid {
        GridPolicy::NonEmpty => (ne_x * ne_y) as u64,
        GridPolicy::Full => (mx * my) as u64,
    }
}
