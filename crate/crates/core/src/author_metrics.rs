//! Per-author citation indices: h, g, e, contemporary h, AWCR/AW,
//! individual h and the multi-authored h_m.

use serde::{Deserialize, Serialize};

use crate::corpus::{paper_age, Corpus};
use crate::error::{MetricError, MetricResult};

/// What the author indices need to know about one paper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorPaperView {
    pub citations: u64,
    pub year: i32,
    pub n_authors: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContemporaryParams {
    pub gamma: f64,
    pub delta: f64,
}

impl Default for ContemporaryParams {
    fn default() -> Self {
        Self { gamma: 4.0, delta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AuthorParams {
    pub contemporary: ContemporaryParams,
    /// Report `floor(h_m)` instead of the real-valued effective rank.
    pub hm_floor: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorMetrics {
    pub author_id: String,
    pub papers: usize,
    pub total_citations: u64,
    pub h: u64,
    pub g: u64,
    pub e: f64,
    pub h_contemporary: u64,
    pub awcr: f64,
    pub aw: f64,
    pub h_individual: f64,
    pub h_m: f64,
    pub now_year: i32,
}

fn sorted_desc(citations: &[u64]) -> Vec<u64> {
    let mut c = citations.to_vec();
    c.sort_unstable_by(|a, b| b.cmp(a));
    c
}

/// Largest `n` such that `n` entries have at least `n` citations.
pub fn h_index(citations: &[u64]) -> u64 {
    h_of_sorted(&sorted_desc(citations))
}

fn h_of_sorted(desc: &[u64]) -> u64 {
    desc.iter().enumerate().take_while(|&(i, &c)| c > i as u64).count() as u64
}

/// Largest `g` such that the `g` most cited entries hold at least `g²` citations.
pub fn g_index(citations: &[u64]) -> u64 {
    let mut sum: u128 = 0;
    let mut g = 0;
    for (i, c) in sorted_desc(citations).into_iter().enumerate() {
        sum += c as u128;
        let rank = i as u128 + 1;
        if sum >= rank * rank {
            g = rank as u64;
        }
    }
    g
}

/// Square root of the h-core citations in excess of `h²`.
pub fn e_index(citations: &[u64]) -> f64 {
    let desc = sorted_desc(citations);
    let h = h_of_sorted(&desc);
    let core: u128 = desc[..h as usize].iter().map(|&c| c as u128).sum();
    ((core - (h as u128) * (h as u128)) as f64).sqrt()
}

/// h-index over the age-discounted scores `gamma * age^-delta * citations`.
pub fn contemporary_h(papers: &[AuthorPaperView], now_year: i32, params: ContemporaryParams) -> MetricResult<u64> {
    if !(params.gamma > 0.0) || !(params.delta >= 0.0) {
        return Err(MetricError::InvalidParameter(format!(
            "contemporary h needs gamma > 0 and delta >= 0, got {params:?}"
        )));
    }
    let mut scores = papers
        .iter()
        .map(|p| {
            let age = paper_age(p.year, now_year)? as f64;
            Ok(params.gamma * age.powf(-params.delta) * p.citations as f64)
        })
        .collect::<MetricResult<Vec<f64>>>()?;
    scores.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(scores
        .iter()
        .enumerate()
        .take_while(|&(i, &s)| s >= (i + 1) as f64)
        .count() as u64)
}

/// Age-weighted citation rate and its square root, the AW-index.
pub fn awcr_aw(papers: &[AuthorPaperView], now_year: i32) -> MetricResult<(f64, f64)> {
    let mut awcr = 0.0;
    for p in papers {
        awcr += p.citations as f64 / paper_age(p.year, now_year)? as f64;
    }
    Ok((awcr, awcr.sqrt()))
}

/// Orders views the way ranked corpus lists are ordered. The sort is stable,
/// so callers feeding id-ordered input keep the id tie-break.
fn ranked(papers: &[AuthorPaperView]) -> Vec<AuthorPaperView> {
    let mut v = papers.to_vec();
    v.sort_by(|a, b| b.citations.cmp(&a.citations).then(a.year.cmp(&b.year)));
    v
}

/// h divided by the mean author count of the h-core papers.
pub fn individual_h(papers: &[AuthorPaperView]) -> f64 {
    let ranked = ranked(papers);
    let desc: Vec<u64> = ranked.iter().map(|p| p.citations).collect();
    let h = h_of_sorted(&desc) as usize;
    if h == 0 {
        return 0.0;
    }
    let mean_authors = ranked[..h].iter().map(|p| p.n_authors.max(1) as f64).sum::<f64>() / h as f64;
    h as f64 / mean_authors
}

/// Multi-authored h_m: the largest fractional effective rank
/// `sum 1/n_authors` still covered by the paper's citation count.
pub fn hm_index(papers: &[AuthorPaperView]) -> f64 {
    let mut r_eff = 0.0;
    let mut best = 0.0;
    for p in ranked(papers) {
        r_eff += 1.0 / p.n_authors.max(1) as f64;
        if p.citations as f64 >= r_eff {
            best = r_eff;
        }
    }
    best
}

pub fn author_views(corpus: &Corpus, author: &str) -> MetricResult<Vec<AuthorPaperView>> {
    Ok(corpus
        .author_papers(author)?
        .into_iter()
        .map(|(p, c)| AuthorPaperView {
            citations: c,
            year: p.year,
            n_authors: p.author_ids.iter().collect::<std::collections::BTreeSet<_>>().len() as u32,
        })
        .collect())
}

pub fn author_report(
    corpus: &Corpus,
    author: &str,
    now_year: i32,
    params: AuthorParams,
) -> MetricResult<AuthorMetrics> {
    let views = author_views(corpus, author)?;
    let citations: Vec<u64> = views.iter().map(|v| v.citations).collect();
    let (awcr, aw) = awcr_aw(&views, now_year)?;
    let h_m = hm_index(&views);
    Ok(AuthorMetrics {
        author_id: author.to_string(),
        papers: views.len(),
        total_citations: citations.iter().sum(),
        h: h_index(&citations),
        g: g_index(&citations),
        e: e_index(&citations),
        h_contemporary: contemporary_h(&views, now_year, params.contemporary)?,
        awcr,
        aw,
        h_individual: individual_h(&views),
        h_m: if params.hm_floor { h_m.floor() } else { h_m },
        now_year,
    })
}
