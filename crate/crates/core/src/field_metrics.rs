//! Topic and field indices: h_b with its m-number, co-citation frequency,
//! and the field-normalized h_f.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::author_metrics::h_index;
use crate::corpus::{paper_age, Corpus};
use crate::error::{MetricError, MetricResult};

/// Upper bound on the number of reference pairs `top_cocited_pairs` will generate.
pub const MAX_COCITATION_PAIRS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicMetrics {
    pub topic: String,
    pub h_b: u64,
    pub n_years: u32,
    pub m_number: f64,
}

/// h-index of all papers tagged `topic`, with the growth rate
/// `m = h_b / n` where `n` counts years since the first tagged paper, inclusive.
pub fn hb_index(corpus: &Corpus, topic: &str, now_year: i32) -> MetricResult<TopicMetrics> {
    let topic = topic.to_lowercase();
    let tagged: Vec<_> = corpus.papers().filter(|p| p.tags.contains(&topic)).collect();
    let first = tagged
        .iter()
        .map(|p| p.year)
        .min()
        .ok_or_else(|| MetricError::UnknownTopic(topic.clone()))?;
    let n_years = paper_age(first, now_year)?;
    let citations: Vec<u64> = tagged.iter().map(|p| corpus.cited_by(&p.id).len() as u64).collect();
    let h_b = h_index(&citations);
    Ok(TopicMetrics {
        topic,
        h_b,
        n_years,
        m_number: h_b as f64 / n_years as f64,
    })
}

/// Number of papers whose reference lists contain both `a` and `b`.
pub fn co_citation_count(corpus: &Corpus, a: &str, b: &str) -> MetricResult<u64> {
    corpus.paper(a)?;
    corpus.paper(b)?;
    if a == b {
        return Err(MetricError::SamePaper(a.to_string()));
    }
    let citers_a: BTreeSet<&String> = corpus.cited_by(a).iter().collect();
    Ok(corpus.cited_by(b).iter().filter(|c| citers_a.contains(c)).count() as u64)
}

/// The `k` most co-cited unordered pairs `(a, b)` with `a < b`, most
/// frequent first and ties in lexicographic pair order. Only references that
/// resolve inside the corpus take part.
pub fn top_cocited_pairs(corpus: &Corpus, k: usize) -> MetricResult<Vec<((String, String), u64)>> {
    if k == 0 {
        return Err(MetricError::InvalidParameter("k must be at least 1".into()));
    }
    let generated: u64 = corpus
        .papers()
        .map(|p| {
            let d = p.references.iter().filter(|r| corpus.paper(r).is_ok()).count() as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum();
    if generated > MAX_COCITATION_PAIRS {
        return Err(MetricError::TooManyPairs {
            limit: MAX_COCITATION_PAIRS,
        });
    }

    let mut counts: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for p in corpus.papers() {
        let mut refs: Vec<&str> = p
            .references
            .iter()
            .filter(|r| corpus.paper(r).is_ok())
            .map(String::as_str)
            .collect();
        refs.sort_unstable();
        for (i, a) in refs.iter().enumerate() {
            for b in &refs[i + 1..] {
                *counts.entry((a, b)).or_default() += 1;
            }
        }
    }
    let mut pairs: Vec<_> = counts.into_iter().collect();
    // stable: BTreeMap order already supplies the pair tie-break
    pairs.sort_by_key(|p| std::cmp::Reverse(p.1));
    pairs.truncate(k);
    Ok(pairs
        .into_iter()
        .map(|((a, b), n)| ((a.to_string(), b.to_string()), n))
        .collect())
}

/// Discipline scaling constants for h_f.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldConstants {
    pub field_id: String,
    /// Mean citations per paper in the field.
    pub c0: f64,
    /// Mean number of field papers per distinct field author.
    pub r0: f64,
}

impl FieldConstants {
    pub fn new(field_id: impl Into<String>, c0: f64, r0: f64) -> MetricResult<Self> {
        if !(c0 > 0.0 && c0.is_finite() && r0 > 0.0 && r0.is_finite()) {
            return Err(MetricError::InvalidParameter(format!(
                "field constants must be positive, got c0={c0}, r0={r0}"
            )));
        }
        Ok(Self {
            field_id: field_id.into(),
            c0,
            r0,
        })
    }
}

/// Derives h_f constants for `field` from the corpus. A paper belongs to the
/// field through its own `field_id`, or through its journal's.
pub fn field_constants(corpus: &Corpus, field: &str) -> MetricResult<FieldConstants> {
    let papers: Vec<_> = corpus
        .papers()
        .filter(|p| corpus.paper_field(p) == Some(field))
        .collect();
    if papers.is_empty() {
        let declared = corpus.journals().any(|j| j.field_id.as_deref() == Some(field));
        return Err(if declared {
            MetricError::EmptyField(field.to_string())
        } else {
            MetricError::UnknownField(field.to_string())
        });
    }
    let mut per_author: BTreeMap<&str, u64> = BTreeMap::new();
    for p in &papers {
        let distinct: BTreeSet<&str> = p.author_ids.iter().map(String::as_str).collect();
        for a in distinct {
            *per_author.entry(a).or_default() += 1;
        }
    }
    let citations: u64 = papers.iter().map(|p| corpus.cited_by(&p.id).len() as u64).sum();
    if citations == 0 {
        return Err(MetricError::CitationFree(field.to_string()));
    }
    let c0 = citations as f64 / papers.len() as f64;
    let r0 = per_author.values().sum::<u64>() as f64 / per_author.len() as f64;
    FieldConstants::new(field, c0, r0)
}

/// Generalized h at the crossing of rescaled citations `c_r / c0` and
/// rescaled rank `r / r0`: `max_r min(c_r / c0, r / r0)` over the
/// citation-descending ranking.
pub fn hf_index(citations: &[u64], constants: &FieldConstants) -> f64 {
    let mut desc = citations.to_vec();
    desc.sort_unstable_by(|a, b| b.cmp(a));
    desc.iter()
        .enumerate()
        .map(|(i, &c)| (c as f64 / constants.c0).min((i + 1) as f64 / constants.r0))
        .fold(0.0, f64::max)
}
