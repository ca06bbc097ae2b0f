//! Expand sparse, positive-only relevance judgements (qrels) by document
//! distance and measure how reliably the expanded judgement sets rank
//! retrieval systems.
//!
//! The pipeline: parse collections, qrels, and runs ([`formats`]); embed
//! documents as tf.idf vectors reduced with PCA and compare them under
//! cosine distance ([`vectorspace`]); pool candidate documents from runs,
//! score each candidate by its minimum distance to a known positive qrel,
//! and promote the globally nearest K% to pseudo-qrels ([`expansion`]);
//! score systems with MAP and compare system rankings with Kendall's tau
//! ([`evaluation`]); generate runs with classic weighting models when none
//! are available ([`retrieval`]); and orchestrate seeded, reproducible
//! end-to-end experiments ([`harness`]).

pub mod error;
pub mod expansion;
pub mod evaluation;
pub mod formats;
pub mod harness;
pub mod retrieval;
pub mod rng;
pub mod stopwords;
pub mod vectorspace;

pub use error::{Error, Result};
