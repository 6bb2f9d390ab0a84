//! Selectional-preference language modeling toolkit.
//!
//! The crate covers the whole path from POS-tagged text to perplexity
//! numbers:
//!
//! * [`corpus`] parses `word<TAB>tag` streams and maps tags onto the events a
//!   small clause automaton understands.
//! * [`extractor`] runs that automaton and emits one record per noun, with its
//!   governing verb or preposition and the word right before it.
//! * [`counts`] integer-codes predictor/target pairs and keeps cluster-level
//!   count tables that can be updated one word move at a time.
//! * [`clustering`] scores two-sided classifications (training likelihood or
//!   leaving-one-out likelihood) and improves them with a greedy exchange
//!   algorithm.
//! * [`model`] builds class-based conditional models with absolute
//!   discounting, a unigram baseline, and linear interpolation.
//! * [`evaluation`] splits data, computes perplexity and tunes the
//!   interpolation weight.
//! * [`pipeline`] chains the stages end to end.
//!
//! Data-parallel loops go through [`exec`]; with the default `parallel`
//! feature they run on rayon, otherwise sequentially. Results are identical
//! either way.

pub mod clustering;
pub mod corpus;
pub mod counts;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod extractor;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
