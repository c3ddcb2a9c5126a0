//! Scientometrics engine: citation indices for authors, journals and fields,
//! pluralistic candidate ranking, reputation-weighted ratings, a peer-review
//! workflow and simple recommenders.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod author_metrics;
pub mod corpus;
pub mod error;
pub mod field_metrics;
pub mod journal_metrics;
pub mod ranking;
pub mod rating;
pub mod recommender;
pub mod review;

pub use corpus::{load_corpus, load_corpus_dir, Corpus, CorpusError};
pub use error::{MetricError, MetricResult};
