//! Two-sided word clustering by greedy exchange.
//!
//! A classification is scored either by the class-model training
//! log-likelihood (`Ml`) or by its leaving-one-out counterpart with absolute
//! discounting (`Lo`). Both scores drop every term that does not depend on
//! the classification, so only differences between classifications are
//! meaningful; [`oracle_loglik_ml`] and [`oracle_loglik_lo`] compute the full
//! likelihoods the slow way for checking exactly that.

mod exchange;
mod oracle;
mod score;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use exchange::{
    initial_classification, read_trace, run_exchange, run_exchange_observed, write_trace, ExchangeConfig,
    ExchangeResult, InitPolicy, MoveEvent, SweepPolicy, SweepStats,
};
pub use oracle::{oracle_loglik_lo, oracle_loglik_lo_with, oracle_loglik_ml};
pub use score::{move_delta, move_delta_counted, score_lo, score_ml};

use crate::counts::CountTable;
use crate::error::{Error, Result};

/// Discount used by the leaving-one-out criterion during clustering.
pub const DEFAULT_DISCOUNT: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Criterion {
    Ml,
    Lo { b: f64 },
}

impl Criterion {
    pub fn lo() -> Self {
        Criterion::Lo { b: DEFAULT_DISCOUNT }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Criterion::Lo { b } if !(b > 0.0 && b < 1.0) => {
                Err(Error::Config(format!("discount b must lie in (0,1), got {b}")))
            }
            _ => Ok(()),
        }
    }

    pub fn score(&self, table: &CountTable) -> Result<f64> {
        match *self {
            Criterion::Ml => Ok(score_ml(table)),
            Criterion::Lo { b } => score_lo(table, b),
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Ml => f.write_str("ml"),
            Criterion::Lo { .. } => f.write_str("lo"),
        }
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ml" => Ok(Criterion::Ml),
            "lo" => Ok(Criterion::lo()),
            other => Err(Error::Config(format!("unknown criterion `{other}`"))),
        }
    }
}
