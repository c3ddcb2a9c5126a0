//! Recommendations by tags and by co-download patterns, subscription alerts,
//! and a popularity-biased random display order that keeps less downloaded
//! papers visible.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, PaperRecord};

/// Floor weight given to zero-popularity items when sampling.
pub const ZERO_POPULARITY_WEIGHT: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("invalid temperature {0}")]
    InvalidTemperature(f64),
    #[error("invalid popularity {popularity} for item `{id}`")]
    InvalidPopularity { id: String, popularity: f64 },
    #[error("duplicate display item `{0}`")]
    DuplicateItem(String),
    #[error("subscription of `{0}` has neither keywords nor authors")]
    EmptySubscription(String),
}

pub type Result<T, E = RecommendError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub paper_id: String,
    pub score: f64,
}

fn top_k(mut scored: Vec<Recommendation>, k: usize) -> Vec<Recommendation> {
    scored.retain(|r| r.score > 0.0);
    scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.paper_id.cmp(&b.paper_id)));
    scored.truncate(k);
    scored
}

pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

pub fn cosine<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    a.intersection(b).count() as f64 / ((a.len() * b.len()) as f64).sqrt()
}

/// Papers sharing tags with `paper`, by Jaccard similarity of tag sets.
pub fn tag_similarity(corpus: &Corpus, paper: &str, k: usize) -> Result<Vec<Recommendation>> {
    if k == 0 {
        return Err(RecommendError::ZeroK);
    }
    let target = corpus.paper(paper)?;
    let scored = corpus
        .papers()
        .filter(|p| p.id != target.id)
        .map(|p| Recommendation {
            paper_id: p.id.clone(),
            score: jaccard(&target.tags, &p.tags),
        })
        .collect();
    Ok(top_k(scored, k))
}

/// Distinct downloading users per paper. Papers nobody downloaded are absent.
pub fn download_sets(corpus: &Corpus) -> BTreeMap<&str, BTreeSet<&str>> {
    let mut sets: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for d in corpus.downloads() {
        sets.entry(d.paper_id.as_str()).or_default().insert(d.user_id.as_str());
    }
    sets
}

/// Papers downloaded by the same people, by cosine similarity of user sets.
/// A paper without downloads gets an empty list.
pub fn coaccess_similarity(corpus: &Corpus, paper: &str, k: usize) -> Result<Vec<Recommendation>> {
    if k == 0 {
        return Err(RecommendError::ZeroK);
    }
    corpus.paper(paper)?;
    let sets = download_sets(corpus);
    let Some(target) = sets.get(paper) else {
        return Ok(Vec::new());
    };
    let scored = sets
        .iter()
        .filter(|(id, _)| **id != paper)
        .map(|(id, users)| Recommendation {
            paper_id: id.to_string(),
            score: cosine(target, users),
        })
        .collect();
    Ok(top_k(scored, k))
}

/// Distinct-user download count for every paper, zero included.
pub fn download_popularity(corpus: &Corpus) -> BTreeMap<String, u64> {
    let sets = download_sets(corpus);
    corpus
        .papers()
        .map(|p| (p.id.clone(), sets.get(p.id.as_str()).map_or(0, |s| s.len() as u64)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayOrder {
    pub item_ids: Vec<String>,
    pub seed: u64,
    pub temperature: f64,
}

/// Orders items for display.
///
/// At temperature 0 this is a popularity sort (ties by id). Above 0, items are
/// drawn one by one without replacement with probability proportional to
/// `popularity^(1/temperature)`; zero popularity counts as
/// [`ZERO_POPULARITY_WEIGHT`]. Same seed, same order.
pub fn randomized_display(items: &[(String, f64)], temperature: f64, seed: u64) -> Result<DisplayOrder> {
    if !(temperature >= 0.0) || !temperature.is_finite() {
        return Err(RecommendError::InvalidTemperature(temperature));
    }
    let mut seen = BTreeSet::new();
    for (id, pop) in items {
        if !(*pop >= 0.0) || !pop.is_finite() {
            return Err(RecommendError::InvalidPopularity {
                id: id.clone(),
                popularity: *pop,
            });
        }
        if !seen.insert(id.as_str()) {
            return Err(RecommendError::DuplicateItem(id.clone()));
        }
    }

    let mut sorted: Vec<&(String, f64)> = items.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if temperature == 0.0 {
        return Ok(DisplayOrder {
            item_ids: sorted.into_iter().map(|(id, _)| id.clone()).collect(),
            seed,
            temperature,
        });
    }

    // Weights in log space, shifted by the maximum, so that small temperatures
    // do not overflow.
    let log_w: Vec<f64> = sorted
        .iter()
        .map(|(_, p)| p.max(ZERO_POPULARITY_WEIGHT).ln() / temperature)
        .collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut pool: Vec<(&str, f64)> = sorted
        .iter()
        .zip(&log_w)
        .map(|((id, _), lw)| (id.as_str(), (lw - max).exp()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(pool.len());
    while !pool.is_empty() {
        let total: f64 = pool.iter().map(|(_, w)| w).sum();
        let mut x = rng.random::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (i, (_, w)) in pool.iter().enumerate() {
            if x < *w {
                pick = i;
                break;
            }
            x -= w;
        }
        order.push(pool.remove(pick).0.to_string());
    }
    Ok(DisplayOrder {
        item_ids: order,
        seed,
        temperature,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subscription {
    pub user_id: String,
    #[serde(default)]
    pub keywords: BTreeSet<String>,
    #[serde(default)]
    pub author_ids: BTreeSet<String>,
}

impl Subscription {
    pub fn validate(&self) -> Result<()> {
        if self.keywords.is_empty() && self.author_ids.is_empty() {
            return Err(RecommendError::EmptySubscription(self.user_id.clone()));
        }
        Ok(())
    }
}

/// Does `paper` concern the subscriber? Keywords match tags ignoring case.
pub fn alert_match(sub: &Subscription, paper: &PaperRecord) -> bool {
    let tags: BTreeSet<String> = paper.tags.iter().map(|t| t.to_lowercase()).collect();
    sub.keywords.iter().any(|k| tags.contains(&k.to_lowercase()))
        || paper.author_ids.iter().any(|a| sub.author_ids.contains(a))
}
