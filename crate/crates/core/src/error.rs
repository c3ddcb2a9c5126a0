use thiserror::Error;

use crate::corpus::CorpusError;

/// Failures shared by the author, journal and field metric modules.
#[derive(Debug, Error)]
pub enum MetricError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("journal `{journal}` received no citations in {year}")]
    NoCitations { journal: String, year: i32 },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("field `{0}` has no papers or no authors")]
    EmptyField(String),
    #[error("field `{0}` has no citations, its mean citation rate is zero")]
    CitationFree(String),
    #[error("unknown topic `{0}`")]
    UnknownTopic(String),
    #[error("a paper cannot be co-cited with itself (`{0}`)")]
    SamePaper(String),
    #[error("co-citation enumeration would generate more than {limit} pairs")]
    TooManyPairs { limit: u64 },
    #[error("power iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("citation flow matrix has no off-diagonal mass")]
    DegenerateMatrix,
    #[error("malformed flow matrix: {0}")]
    MalformedMatrix(String),
    #[error("journal key sets differ")]
    KeyMismatch,
    #[error("no articles in any journal")]
    NoArticles,
}

pub type MetricResult<T> = Result<T, MetricError>;
