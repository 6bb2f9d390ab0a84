//! Class-based conditional models with absolute discounting, the unigram
//! baseline and linear interpolation.
//!
//! A cluster model factors `p(y | x) = p(G2(y) | G1(x)) * p(y | G2(y))`.
//! The class pair distribution subtracts `b` from every seen cluster-pair
//! count and spreads the freed mass evenly over unseen pairs of the grid.
//! By default the class conditional divides that joint by the relative
//! frequency of `G1(x)`, which leaves each context slightly unnormalized;
//! `strict` renormalizes per context instead.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::clustering::DEFAULT_DISCOUNT;
use crate::corpus::Vocabulary;
use crate::counts::{encode_corpus, tabulate_with, Classification, CountTable, GridPolicy, PairCorpus, Side};
use crate::error::{Error, Result};
use crate::extractor::{PairMode, PairRecord};

/// Token that rare training words fold into under the unk policy.
pub const UNK: &str = "<unk>";

const HEADER: &str = "#selpref-model v1";

/// Discounted-to-ideal ratio `n_1 / (n_1 + 2 n_2)`, falling back to 0.75
/// when that is undefined or not strictly inside (0,1).
pub fn estimate_b(table: &CountTable) -> f64 {
    let (n1, n2) = (table.n_1() as f64, table.n_2() as f64);
    b_from_counts(n1, n2)
}

fn b_from_counts(n1: f64, n2: f64) -> f64 {
    let denom = n1 + 2.0 * n2;
    if denom == 0.0 {
        return DEFAULT_DISCOUNT;
    }
    let b = n1 / denom;
    if b > 0.0 && b < 1.0 {
        b
    } else {
        DEFAULT_DISCOUNT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[derive(Default)]
pub enum BPolicy {
    Fixed(f64),
    #[default]
    Estimated,
}

impl fmt::Display for BPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BPolicy::Fixed(b) => write!(f, "fixed:{b}"),
            BPolicy::Estimated => f.write_str("estimated"),
        }
    }
}

impl FromStr for BPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(BPolicy::Estimated),
            "fixed" => Ok(BPolicy::Fixed(DEFAULT_DISCOUNT)),
            _ => match s.strip_prefix("fixed:").map(str::parse::<f64>) {
                Some(Ok(b)) if b > 0.0 && b < 1.0 => Ok(BPolicy::Fixed(b)),
                _ => Err(Error::Config(format!("unknown b policy `{s}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ModelOptions {
    pub b_policy: BPolicy,
    pub strict: bool,
    pub grid: GridPolicy,
}

/// Out-of-vocabulary handling for test events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OovPolicy {
    /// Unknown events are not scored and are counted as skipped.
    #[default]
    Skip,
    /// Training tokens seen fewer than `min_count` times become [`UNK`];
    /// unknown test tokens map to it.
    Unk { min_count: u64 },
}

impl fmt::Display for OovPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OovPolicy::Skip => f.write_str("skip"),
            OovPolicy::Unk { min_count } => write!(f, "unk:{min_count}"),
        }
    }
}

impl FromStr for OovPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" => Ok(OovPolicy::Skip),
            "unk" => Ok(OovPolicy::Unk { min_count: 2 }),
            _ => match s.strip_prefix("unk:").map(str::parse) {
                Some(Ok(min_count)) => Ok(OovPolicy::Unk { min_count }),
                _ => Err(Error::Config(format!("unknown OOV policy `{s}`"))),
            },
        }
    }
}

/// Replaces tokens seen fewer than `min_count` times with [`UNK`], per side.
pub fn map_rare_to_unk(pairs: &[(String, String)], min_count: u64) -> Vec<(String, String)> {
    let corpus = encode_corpus(pairs);
    let keep = |v: &Vocabulary, t: &str| v.id(t).is_some_and(|i| v.count(i) >= min_count);
    pairs
        .iter()
        .map(|(x, y)| {
            let x = if keep(&corpus.x_vocab, x) { x.clone() } else { UNK.to_string() };
            let y = if keep(&corpus.y_vocab, y) { y.clone() } else { UNK.to_string() };
            (x, y)
        })
        .collect()
}

fn lookup(vocab: &Vocabulary, token: &str) -> Option<usize> {
    vocab.id(token).or_else(|| vocab.id(UNK))
}

/// Probability of a record's target object, or `None` when the record
/// cannot be scored (missing predictor or out-of-vocabulary token).
pub trait Scorer: Sync {
    fn score(&self, record: &PairRecord) -> Option<f64>;
}

impl<T: Scorer + ?Sized> Scorer for &T {
    fn score(&self, record: &PairRecord) -> Option<f64> {
        (**self).score(record)
    }
}

#[derive(Debug, Clone)]
pub struct ClusterBigramModel {
    mode: PairMode,
    corpus: PairCorpus,
    classification: Classification,
    table: CountTable,
    b: f64,
    strict: bool,
    /// Σ_gy joint(gx, gy) per x cluster, for strict normalization.
    row_mass: Vec<f64>,
}

impl ClusterBigramModel {
    pub fn fit(
        corpus: PairCorpus,
        classification: Classification,
        mode: PairMode,
        options: ModelOptions,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyPartition("training pairs"));
        }
        let table = tabulate_with(&corpus, &classification, options.grid)?;
        let b = match options.b_policy {
            BPolicy::Fixed(b) if b > 0.0 && b < 1.0 => b,
            BPolicy::Fixed(b) => return Err(Error::Config(format!("discount b must lie in (0,1), got {b}"))),
            BPolicy::Estimated => estimate_b(&table),
        };
        let mut model =
            ClusterBigramModel { mode, corpus, classification, table, b, strict: options.strict, row_mass: Vec::new() };
        let (mx, my) = (model.classification.num_clusters(Side::X), model.classification.num_clusters(Side::Y));
        model.row_mass = (0..mx).map(|gx| (0..my).map(|gy| model.joint_cluster_prob(gx, gy)).sum()).collect();
        Ok(model)
    }

    pub fn mode(&self) -> PairMode {
        self.mode
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn table(&self) -> &CountTable {
        &self.table
    }

    pub fn classification(&self) -> &Classification {
        &self.classification
    }

    pub fn vocab(&self, side: Side) -> &Vocabulary {
        self.corpus.vocab(side)
    }

    /// Discounted probability of the cluster pair.
    pub fn joint_cluster_prob(&self, gx: usize, gy: usize) -> f64 {
        let t = &self.table;
        let n = t.total() as f64;
        let c = t.cell(gx, gy);
        if c > 0 {
            // with no unseen cells there is nowhere to move mass to
            let b = if t.n_0() > 0 { self.b } else { 0.0 };
            (c as f64 - b) / n
        } else if t.in_grid(gx, gy) && t.n_0() > 0 {
            t.n_plus() as f64 * self.b / (t.n_0() as f64 * n)
        } else {
            0.0
        }
    }

    /// `p(gy | gx)`.
    pub fn class_conditional(&self, gx: usize, gy: usize) -> f64 {
        let joint = self.joint_cluster_prob(gx, gy);
        if self.strict {
            joint / self.row_mass[gx]
        } else {
            let p_gx = self.table.cluster_count(Side::X, gx) as f64 / self.table.total() as f64;
            joint / p_gx
        }
    }

    /// `p(y | G2(y))`.
    pub fn membership(&self, y: usize) -> f64 {
        let gy = self.classification.cluster(Side::Y, y);
        self.table.word_count(Side::Y, y) as f64 / self.table.cluster_count(Side::Y, gy) as f64
    }

    pub fn conditional_prob(&self, x: usize, y: usize) -> Result<f64> {
        if x >= self.corpus.x_vocab.len() {
            return Err(Error::UnknownToken { side: "x", token: format!("#{x}") });
        }
        if y >= self.corpus.y_vocab.len() {
            return Err(Error::UnknownToken { side: "y", token: format!("#{y}") });
        }
        let gx = self.classification.cluster(Side::X, x);
        let gy = self.classification.cluster(Side::Y, y);
        Ok(self.class_conditional(gx, gy) * self.membership(y))
    }

    /// Probability for string tokens; `None` if either is unknown.
    pub fn prob_words(&self, x: &str, y: &str) -> Option<f64> {
        let xi = lookup(&self.corpus.x_vocab, x)?;
        let yi = lookup(&self.corpus.y_vocab, y)?;
        self.conditional_prob(xi, yi).ok()
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let (mx, my) = (self.classification.num_clusters(Side::X), self.classification.num_clusters(Side::Y));
        writeln!(w, "{HEADER}")?;
        writeln!(w, "kind\tcluster")?;
        writeln!(w, "mode\t{}", self.mode)?;
        writeln!(w, "b\t{}", self.b)?;
        writeln!(w, "grid\t{}", self.table.grid())?;
        writeln!(w, "strict\t{}", self.strict)?;
        writeln!(w, "clusters\t{mx}\t{my}")?;
        for (side, name) in [(Side::X, "[x]"), (Side::Y, "[y]")] {
            writeln!(w, "{name}")?;
            for (id, token, count) in self.corpus.vocab(side).iter() {
                writeln!(w, "{token}\t{}\t{count}", self.classification.cluster(side, id))?;
            }
        }
        writeln!(w, "[pairs]")?;
        let words = self.table.words();
        for x in 0..self.corpus.x_vocab.len() {
            for &(y, c) in words.neighbours(Side::X, x) {
                writeln!(
                    w,
                    "{}\t{}\t{c}",
                    self.corpus.x_vocab.token(x).unwrap_or_default(),
                    self.corpus.y_vocab.token(y).unwrap_or_default()
                )?;
            }
        }
        Ok(())
    }
}

impl Scorer for ClusterBigramModel {
    fn score(&self, record: &PairRecord) -> Option<f64> {
        self.prob_words(record.predictor(self.mode)?, &record.object)
    }
}

#[derive(Debug, Clone)]
pub struct UnigramModel {
    vocab: Vocabulary,
}

impl UnigramModel {
    pub fn fit<S: AsRef<str>>(targets: impl IntoIterator<Item = S>) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        for t in targets {
            vocab.add(t.as_ref(), 1);
        }
        if vocab.total() == 0 {
            return Err(Error::EmptyPartition("training targets"));
        }
        Ok(UnigramModel { vocab })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn unigram_prob(&self, y: usize) -> Result<f64> {
        if y >= self.vocab.len() {
            return Err(Error::UnknownToken { side: "y", token: format!("#{y}") });
        }
        Ok(self.vocab.count(y) as f64 / self.vocab.total() as f64)
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{HEADER}")?;
        writeln!(w, "kind\tunigram")?;
        writeln!(w, "[y]")?;
        for (_, token, count) in self.vocab.iter() {
            writeln!(w, "{token}\t{count}")?;
        }
        Ok(())
    }
}

impl Scorer for UnigramModel {
    fn score(&self, record: &PairRecord) -> Option<f64> {
        self.unigram_prob(lookup(&self.vocab, &record.object)?).ok()
    }
}

/// `λ p_a + (1 - λ) p_b` for the same target object.
#[derive(Debug, Clone)]
pub struct InterpolatedModel<A, B> {
    lambda: f64,
    pub model_a: A,
    pub model_b: B,
}

impl<A: Scorer, B: Scorer> InterpolatedModel<A, B> {
    pub fn new(lambda: f64, model_a: A, model_b: B) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::Config(format!("lambda must lie in (0,1), got {lambda}")));
        }
        Ok(InterpolatedModel { lambda, model_a, model_b })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn interpolated_prob(&self, record: &PairRecord) -> Option<f64> {
        Some(mix(self.lambda, self.model_a.score(record)?, self.model_b.score(record)?))
    }
}

/// Written as `pb + λ (pa - pb)` so equal components mix to exactly that value.
pub(crate) fn mix(lambda: f64, pa: f64, pb: f64) -> f64 {
    pb + lambda * (pa - pb)
}

impl<A: Scorer, B: Scorer> Scorer for InterpolatedModel<A, B> {
    fn score(&self, record: &PairRecord) -> Option<f64> {
        self.interpolated_prob(record)
    }
}

/// Any model that can be stored in a model file.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Cluster(Box<ClusterBigramModel>),
    Unigram(UnigramModel),
    Interpolated(Box<InterpolatedModel<AnyModel, AnyModel>>),
}

impl Scorer for AnyModel {
    fn score(&self, record: &PairRecord) -> Option<f64> {
        match self {
            AnyModel::Cluster(m) => m.score(record),
            AnyModel::Unigram(m) => m.score(record),
            AnyModel::Interpolated(m) => m.score(record),
        }
    }
}

impl AnyModel {
    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match self {
            AnyModel::Cluster(m) => m.write(w),
            AnyModel::Unigram(m) => m.write(w),
            AnyModel::Interpolated(m) => {
                writeln!(w, "{HEADER}")?;
                writeln!(w, "kind\tinterpolated")?;
                writeln!(w, "lambda\t{}", m.lambda)?;
                for (name, part) in [("a", &m.model_a), ("b", &m.model_b)] {
                    let mut buf = Vec::new();
                    part.write(&mut buf)?;
                    let lines = buf.iter().filter(|&&c| c == b'\n').count();
                    writeln!(w, "component\t{name}\t{lines}")?;
                    w.write_all(&buf)?;
                }
                Ok(())
            }
        }
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let lines = reader
            .lines()
            .collect::<std::io::Result<Vec<String>>>()
            .map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
        let mut cursor = Cursor { lines: &lines, pos: 0, base: 0 };
        parse_model(&mut cursor)
    }
}

struct Cursor<'a> {
    lines: &'a [String],
    pos: usize,
    base: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { line: self.base + self.pos, message: message.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        let line = self.lines.get(self.pos).ok_or_else(|| self.err("unexpected end of model file"))?;
        self.pos += 1;
        Ok(line.as_str())
    }

    fn field(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut parts = line.split('\t');
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(parts.collect())
    }

    fn value<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let f = self.field(key)?;
        match f.as_slice() {
            [v] => v.parse().map_err(|_| self.err(format!("bad value for `{key}`"))),
            _ => Err(self.err(format!("expected one value for `{key}`"))),
        }
    }

    fn section_rows(&mut self, name: &str) -> Result<Vec<Vec<&'a str>>> {
        if self.next()? != name {
            return Err(self.err(format!("expected section {name}")));
        }
        let mut rows = Vec::new();
        while let Some(line) = self.lines.get(self.pos) {
            if line.starts_with('[') && line.ends_with(']') && !line.contains('\t') {
                break;
            }
            self.pos += 1;
            rows.push(line.split('\t').collect());
        }
        Ok(rows)
    }
}

fn parse_model(c: &mut Cursor<'_>) -> Result<AnyModel> {
    if c.next()? != HEADER {
        return Err(c.err("missing or unsupported model header"));
    }
    let kind: String = c.value("kind")?;
    match kind.as_str() {
        "unigram" => {
            let mut vocab = Vocabulary::new();
            for row in c.section_rows("[y]")? {
                match row.as_slice() {
                    [t, n] => vocab.add(t, n.parse().map_err(|_| c.err("bad count"))?),
                    _ => return Err(c.err("expected token<TAB>count")),
                };
            }
            Ok(AnyModel::Unigram(UnigramModel { vocab }))
        }
        "cluster" => {
            let mode: PairMode = c.value("mode")?;
            let b: f64 = c.value("b")?;
            let grid: GridPolicy = c.value("grid")?;
            let strict: bool = c.value("strict")?;
            let dims = c.field("clusters")?;
            let (mx, my) = match dims.as_slice() {
                [a, b] => (
                    a.parse().map_err(|_| c.err("bad cluster count"))?,
                    b.parse().map_err(|_| c.err("bad cluster count"))?,
                ),
                _ => return Err(c.err("expected clusters<TAB>mx<TAB>my")),
            };
            let mut corpus = PairCorpus::default();
            let mut assign = [Vec::new(), Vec::new()];
            for (k, name) in ["[x]", "[y]"].into_iter().enumerate() {
                let vocab = if k == 0 { &mut corpus.x_vocab } else { &mut corpus.y_vocab };
                for row in c.section_rows(name)? {
                    match row.as_slice() {
                        [t, g, _] => {
                            vocab.add(t, 0);
                            assign[k].push(g.parse().map_err(|_| c.err("bad cluster id"))?);
                        }
                        _ => return Err(c.err("expected token<TAB>cluster<TAB>count")),
                    }
                }
            }
            let mut pairs = Vec::new();
            for row in c.section_rows("[pairs]")? {
                match row.as_slice() {
                    [x, y, n] => {
                        let xi = corpus.x_vocab.id(x).ok_or_else(|| c.err(format!("pair uses unknown x `{x}`")))?;
                        let yi = corpus.y_vocab.id(y).ok_or_else(|| c.err(format!("pair uses unknown y `{y}`")))?;
                        let n: u64 = n.parse().map_err(|_| c.err("bad pair count"))?;
                        pairs.push((xi, yi, n));
                    }
                    _ => return Err(c.err("expected x<TAB>y<TAB>count")),
                }
            }
            // rebuild vocab counts from the pair counts
            let (xv, yv) = (corpus.x_vocab.clone(), corpus.y_vocab.clone());
            for &(x, y, n) in &pairs {
                corpus.x_vocab.add(xv.token(x).unwrap_or_default(), n);
                corpus.y_vocab.add(yv.token(y).unwrap_or_default(), n);
                corpus.pairs.extend(std::iter::repeat_n((x, y), n as usize));
            }
            let [g1, g2] = assign;
            let classification = Classification::new(g1, g2, mx, my)?;
            let options = ModelOptions { b_policy: BPolicy::Fixed(b), strict, grid };
            Ok(AnyModel::Cluster(Box::new(ClusterBigramModel::fit(corpus, classification, mode, options)?)))
        }
        "interpolated" => {
            let lambda: f64 = c.value("lambda")?;
            let mut parts = Vec::new();
            for name in ["a", "b"] {
                let f = c.field("component")?;
                let n: usize = match f.as_slice() {
                    [tag, n] if *tag == name => n.parse().map_err(|_| c.err("bad component length"))?,
                    _ => return Err(c.err(format!("expected component {name}"))),
                };
                let end = c.pos + n;
                if end > c.lines.len() {
                    return Err(c.err("component runs past end of file"));
                }
                let mut sub = Cursor { lines: &c.lines[c.pos..end], pos: 0, base: c.base + c.pos };
                parts.push(parse_model(&mut sub)?);
                c.pos = end;
            }
            let b = parts.pop().unwrap_or_else(|| unreachable!());
            let a = parts.pop().unwrap_or_else(|| unreachable!());
            Ok(AnyModel::Interpolated(Box::new(InterpolatedModel::new(lambda, a, b)?)))
        }
        other => Err(c.err(format!("unknown model kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::tests::{arb_instance, c1};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c1_model(strict: bool) -> ClusterBigramModel {
        let (corpus, g) = c1();
        let options = ModelOptions { b_policy: BPolicy::Fixed(0.75), strict, grid: GridPolicy::NonEmpty };
        ClusterBigramModel::fit(corpus, g, PairMode::VerbObject, options).unwrap()
    }

    #[test]
    fn estimated_discount() {
        assert_abs_diff_eq!(b_from_counts(3.0, 2.0), 3.0 / 7.0, epsilon = 1e-15);
        assert_eq!(b_from_counts(0.0, 5.0), 0.75);
        assert_eq!(b_from_counts(0.0, 0.0), 0.75);
        assert_eq!(b_from_counts(4.0, 0.0), 0.75);
        let (corpus, g) = c1();
        let t = crate::counts::tabulate(&corpus, &g).unwrap();
        // n_1 = 1, n_2 = 1
        assert_abs_diff_eq!(estimate_b(&t), 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn b_policy_parses() {
        assert_eq!("estimated".parse::<BPolicy>().unwrap(), BPolicy::Estimated);
        assert_eq!("fixed".parse::<BPolicy>().unwrap(), BPolicy::Fixed(0.75));
        let p: BPolicy = "fixed:0.5".parse().unwrap();
        assert_eq!(p.to_string().parse::<BPolicy>().unwrap(), p);
        assert!("fixed:1.5".parse::<BPolicy>().is_err());
    }

    #[test]
    fn c1_joint_probabilities() {
        let m = c1_model(false);
        assert_abs_diff_eq!(m.joint_cluster_prob(0, 0), 0.53125, epsilon = 1e-15);
        assert_abs_diff_eq!(m.joint_cluster_prob(0, 1), 0.28125, epsilon = 1e-15);
        let total: f64 =
            (0..2).flat_map(|a| (0..2).map(move |b| (a, b))).map(|(a, b)| m.joint_cluster_prob(a, b)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn c1_conditionals() {
        let m = c1_model(false);
        let (x, y) = (m.vocab(Side::X).id("eat").unwrap(), m.vocab(Side::Y).id("apple").unwrap());
        assert_abs_diff_eq!(m.conditional_prob(x, y).unwrap(), 0.85 * 4.0 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.prob_words("eat", "car").unwrap(), 0.45, epsilon = 1e-12);
        assert!(m.prob_words("fly", "car").is_none());
        assert!(m.conditional_prob(7, 0).is_err());
    }

    #[test]
    fn strict_conditionals_normalize() {
        let m = c1_model(true);
        for x in ["eat", "drive"] {
            let s: f64 = ["apple", "bread", "car"].iter().map(|y| m.prob_words(x, y).unwrap()).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
        // the unrenormalised conditional does not sum to one here
        let m = c1_model(false);
        let s: f64 = ["apple", "bread", "car"].iter().map(|y| m.prob_words("eat", y).unwrap()).sum();
        assert!((s - 1.0).abs() > 1e-3);
    }

    #[test]
    fn small_discount_recovers_relative_frequencies() {
        // every cluster pair seen
        let pairs = [("a", "p"), ("a", "q"), ("a", "p"), ("b", "q"), ("b", "p"), ("b", "q"), ("c", "r"), ("c", "p")];
        let corpus = encode_corpus(&pairs);
        let g = Classification::new(vec![0, 1, 1], vec![0, 1, 1], 2, 2).unwrap();
        let t = crate::counts::tabulate(&corpus, &g).unwrap();
        assert_eq!(t.n_0(), 0);
        let opts = ModelOptions { b_policy: BPolicy::Fixed(1e-9), ..Default::default() };
        let m = ClusterBigramModel::fit(corpus.clone(), g.clone(), PairMode::VerbObject, opts).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let (gx, gy) = (g.cluster(Side::X, x), g.cluster(Side::Y, y));
                let ml = t.cell(gx, gy) as f64 / t.cluster_count(Side::X, gx) as f64 * t.word_count(Side::Y, y) as f64
                    / t.cluster_count(Side::Y, gy) as f64;
                assert_abs_diff_eq!(m.conditional_prob(x, y).unwrap(), ml, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn unigram_and_interpolation() {
        let u = UnigramModel::fit(["a", "b", "a", "c"]).unwrap();
        assert_abs_diff_eq!(u.unigram_prob(0).unwrap(), 0.5, epsilon = 1e-15);
        assert!(UnigramModel::fit(Vec::<String>::new()).is_err());

        struct Fixed(f64);
        impl Scorer for Fixed {
            fn score(&self, _: &PairRecord) -> Option<f64> {
                Some(self.0)
            }
        }
        let r = PairRecord::direct_object("v", "o", None);
        let m = InterpolatedModel::new(0.5, Fixed(0.2), Fixed(0.4)).unwrap();
        assert_abs_diff_eq!(m.interpolated_prob(&r).unwrap(), 0.3, epsilon = 1e-15);
        let hi = InterpolatedModel::new(1.0 - 1e-12, Fixed(0.2), Fixed(0.4)).unwrap();
        assert_abs_diff_eq!(hi.score(&r).unwrap(), 0.2, epsilon = 1e-9);
        let lo = InterpolatedModel::new(1e-12, Fixed(0.2), Fixed(0.4)).unwrap();
        assert_abs_diff_eq!(lo.score(&r).unwrap(), 0.4, epsilon = 1e-9);
        assert!(InterpolatedModel::new(1.0, Fixed(0.2), Fixed(0.4)).is_err());
    }

    #[test]
    fn unk_mapping() {
        let pairs: Vec<(String, String)> =
            [("a", "p"), ("a", "p"), ("b", "q")].iter().map(|(x, y)| (x.to_string(), y.to_string())).collect();
        let mapped = map_rare_to_unk(&pairs, 2);
        assert_eq!(mapped[2], (UNK.to_string(), UNK.to_string()));
        assert_eq!(mapped[0], ("a".to_string(), "p".to_string()));
        let u = UnigramModel::fit(mapped.iter().map(|p| &p.1)).unwrap();
        let r = PairRecord::direct_object("z", "never-seen", None);
        assert_abs_diff_eq!(u.score(&r).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!("unk:3".parse::<OovPolicy>().unwrap(), OovPolicy::Unk { min_count: 3 });
    }

    #[test]
    fn model_file_roundtrip() {
        let m = AnyModel::Interpolated(Box::new(
            InterpolatedModel::new(
                0.25,
                AnyModel::Cluster(Box::new(c1_model(false))),
                AnyModel::Unigram(UnigramModel::fit(["apple", "car", "apple"]).unwrap()),
            )
            .unwrap(),
        ));
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = AnyModel::read(buf.as_slice()).unwrap();
        let mut buf2 = Vec::new();
        back.write(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
        let r = PairRecord::direct_object("eat", "apple", Some("the"));
        assert_eq!(m.score(&r), back.score(&r));
        assert!(AnyModel::read("nonsense\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn distributions_sum_to_one((corpus, g) in arb_instance(), b in 0.01f64..0.99, full in any::<bool>()) {
            let grid = if full { GridPolicy::Full } else { GridPolicy::NonEmpty };
            let opts = ModelOptions { b_policy: BPolicy::Fixed(b), strict: false, grid };
            let m = ClusterBigramModel::fit(corpus.clone(), g.clone(), PairMode::VerbObject, opts).unwrap();
            let (mx, my) = (g.num_clusters(Side::X), g.num_clusters(Side::Y));
            let total: f64 = (0..mx).flat_map(|a| (0..my).map(move |c| (a, c))).map(|(a, c)| m.joint_cluster_prob(a, c)).sum();
            prop_assert!((total - 1.0).abs() < 1e-12, "joint sums to {}", total);
            for gy in 0..my {
                let ws: Vec<usize> = (0..corpus.y_vocab.len()).filter(|&y| g.cluster(Side::Y, y) == gy).collect();
                if !ws.is_empty() {
                    let s: f64 = ws.iter().map(|&y| m.membership(y)).sum();
                    prop_assert!((s - 1.0).abs() < 1e-12);
                }
            }
            let u = UnigramModel::fit(corpus.pairs.iter().map(|&(_, y)| corpus.y_vocab.token(y).unwrap())).unwrap();
            let s: f64 = (0..u.vocab().len()).map(|y| u.unigram_prob(y).unwrap()).sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn interpolation_between_components(pa in 1e-6f64..1.0, pb in 1e-6f64..1.0, lambda in 0.001f64..0.999) {
            let p = mix(lambda, pa, pb);
            prop_assert!(p >= pa.min(pb) - 1e-15 && p <= pa.max(pb) + 1e-15);
        }
    }
}
