//! Brute-force likelihoods, computed from raw pairs without `CountTable`.

use std::collections::HashMap;

use crate::counts::{Classification, GridPolicy, PairCorpus, Side};
use crate::error::{Error, Result};

#[derive(Default)]
struct RawCounts {
    joint: HashMap<(usize, usize), u64>,
    gx: HashMap<usize, u64>,
    gy: HashMap<usize, u64>,
    y: HashMap<usize, u64>,
    n: u64,
}

impl RawCounts {
    fn from_pairs<'a>(pairs: impl Iterator<Item = &'a (usize, usize)>, g: &Classification) -> Self {
        let mut c = RawCounts::default();
        for &(x, y) in pairs {
            let (a, b) = (g.cluster(Side::X, x), g.cluster(Side::Y, y));
            *c.joint.entry((a, b)).or_default() += 1;
            *c.gx.entry(a).or_default() += 1;
            *c.gy.entry(b).or_default() += 1;
            *c.y.entry(y).or_default() += 1;
            c.n += 1;
        }
        c
    }
}

/// Σ_i log p_G(Y[i] | X[i]) with relative-frequency estimates.
pub fn oracle_loglik_ml(corpus: &PairCorpus, g: &Classification) -> f64 {
    let c = RawCounts::from_pairs(corpus.pairs.iter(), g);
    corpus
        .pairs
        .iter()
        .map(|&(x, y)| {
            let (a, b) = (g.cluster(Side::X, x), g.cluster(Side::Y, y));
            let p = c.joint[&(a, b)] as f64 / c.gx[&a] as f64 * c.y[&y] as f64 / c.gy[&b] as f64;
            p.ln()
        })
        .sum()
}

pub fn oracle_loglik_lo(corpus: &PairCorpus, g: &Classification, b: f64) -> Result<f64> {
    oracle_loglik_lo_with(corpus, g, b, GridPolicy::NonEmpty)
}

/// Leaving-one-out log-likelihood with the word-membership term omitted.
///
/// For every held-out pair the remaining corpus is recounted from scratch,
/// then the discounted class-pair estimate is divided by the two class
/// unigram estimates.
pub fn oracle_loglik_lo_with(corpus: &PairCorpus, g: &Classification, b: f64, grid: GridPolicy) -> Result<f64> {
    let full = RawCounts::from_pairs(corpus.pairs.iter(), g);
    if full.gx.values().chain(full.gy.values()).any(|&c| c < 2) {
        return Err(Error::Domain("a non-empty cluster has marginal count 1".into()));
    }
    let mut total = 0.0;
    for i in 0..corpus.pairs.len() {
        let rest = corpus.pairs[..i].iter().chain(&corpus.pairs[i + 1..]);
        let t = RawCounts::from_pairs(rest, g);
        let (x, y) = corpus.pairs[i];
        let (a, c) = (g.cluster(Side::X, x), g.cluster(Side::Y, y));
        let n = t.n as f64;

        let n_plus = t.joint.values().filter(|&&v| v > 0).count() as u64;
        let grid_size = match grid {
            GridPolicy::NonEmpty => (t.gx.len() * t.gy.len()) as u64,
            GridPolicy::Full => (g.num_clusters(Side::X) * g.num_clusters(Side::Y)) as u64,
        };
        let n_0 = grid_size - n_plus;

        let seen = t.joint.get(&(a, c)).copied().unwrap_or(0);
        let p_joint = if seen > 0 { (seen as f64 - b) / n } else { n_plus as f64 * b / (n_0 as f64 * n) };
        let p_gx = t.gx[&a] as f64 / n;
        let p_gy = t.gy[&c] as f64 / n;
        let term = (p_joint / p_gx / p_gy).ln();
        if !term.is_finite() {
            return Err(Error::Domain(format!("held-out pair {i} has probability {p_joint}")));
        }
        total += term;
    }
    Ok(total)
}
