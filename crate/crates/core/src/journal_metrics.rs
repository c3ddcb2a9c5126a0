//! Journal-level indicators: impact factor, immediacy, cited half-life,
//! aggregate impact factor, Eigenfactor and Article Influence.
//!
//! Ratios whose denominator is empty evaluate to 0 and carry
//! `zero_denominator = true` instead of failing, so batch reports never abort
//! on a quiet journal.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusError, PaperRecord};
use crate::error::{MetricError, MetricResult};

pub const DEFAULT_JIF_WINDOW: u32 = 2;
pub const DEFAULT_EIGENFACTOR_WINDOW: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub value: f64,
    pub numerator: u64,
    pub denominator: u64,
    pub zero_denominator: bool,
}

impl Ratio {
    fn new(numerator: u64, denominator: u64) -> Self {
        if denominator == 0 {
            Self {
                value: 0.0,
                numerator,
                denominator,
                zero_denominator: true,
            }
        } else {
            Self {
                value: numerator as f64 / denominator as f64,
                numerator,
                denominator,
                zero_denominator: false,
            }
        }
    }
}

/// Citations in `cite_year` to `papers` published within `years`, per paper.
fn pooled_ratio<'a>(
    corpus: &Corpus,
    papers: impl Iterator<Item = &'a PaperRecord>,
    years: std::ops::RangeInclusive<i32>,
    cite_year: i32,
) -> Ratio {
    let mut num = 0;
    let mut den = 0;
    for p in papers.filter(|p| years.contains(&p.year)) {
        den += 1;
        num += corpus
            .cited_by(&p.id)
            .iter()
            .filter(|c| corpus.paper(c).is_ok_and(|c| c.year == cite_year))
            .count() as u64;
    }
    Ratio::new(num, den)
}

fn check_window(window: u32) -> MetricResult<()> {
    if window == 0 {
        return Err(MetricError::InvalidParameter("window must be at least 1".into()));
    }
    Ok(())
}

/// Journal impact factor for `ref_year` over the preceding `window` years.
pub fn jif(corpus: &Corpus, journal: &str, ref_year: i32, window: u32) -> MetricResult<Ratio> {
    corpus.journal(journal)?;
    check_window(window)?;
    let years = ref_year - window as i32..=ref_year - 1;
    Ok(pooled_ratio(corpus, corpus.journal_papers(journal), years, ref_year))
}

/// Same-year citations per article published in `year`.
pub fn immediacy(corpus: &Corpus, journal: &str, year: i32) -> MetricResult<Ratio> {
    corpus.journal(journal)?;
    Ok(pooled_ratio(corpus, corpus.journal_papers(journal), year..=year, year))
}

/// Impact factor of a field, pooling every journal assigned to it.
pub fn aggregate_impact_factor(corpus: &Corpus, field: &str, ref_year: i32, window: u32) -> MetricResult<Ratio> {
    check_window(window)?;
    let journals: Vec<&str> = corpus
        .journals()
        .filter(|j| j.field_id.as_deref() == Some(field))
        .map(|j| j.id.as_str())
        .collect();
    if journals.is_empty() {
        return Err(MetricError::UnknownField(field.to_string()));
    }
    let years = ref_year - window as i32..=ref_year - 1;
    let papers = journals.into_iter().flat_map(|j| corpus.journal_papers(j));
    Ok(pooled_ratio(corpus, papers, years, ref_year))
}

/// Citations received in `ref_year` by the journal's papers, bucketed by
/// cited-paper age (index 0 is age 1, a paper from `ref_year` itself).
/// Papers dated after `ref_year` cannot be cited in it and are ignored.
pub fn citation_age_profile(corpus: &Corpus, journal: &str, ref_year: i32) -> MetricResult<Vec<u64>> {
    corpus.journal(journal)?;
    let mut buckets: Vec<u64> = Vec::new();
    for p in corpus.journal_papers(journal).filter(|p| p.year <= ref_year) {
        let n = corpus.citations_in_year(&p.id, ref_year)?;
        if n == 0 {
            continue;
        }
        let age = (ref_year - p.year) as usize;
        if buckets.len() <= age {
            buckets.resize(age + 1, 0);
        }
        buckets[age] += n;
    }
    Ok(buckets)
}

/// Median age of the journal's articles cited in `ref_year`.
///
/// Cumulative citation counts are placed at integer ages 1, 2, ... and joined
/// linearly; the result is where that curve first reaches half the total,
/// never below 1. A value `k` therefore satisfies
/// `cum(ceil(k) - 1) < total/2 <= cum(ceil(k))`, and it is an integer exactly
/// when some cumulative count equals half the total.
pub fn cited_half_life(corpus: &Corpus, journal: &str, ref_year: i32) -> MetricResult<f64> {
    let buckets = citation_age_profile(corpus, journal, ref_year)?;
    half_life_from_profile(&buckets).ok_or_else(|| MetricError::NoCitations {
        journal: journal.to_string(),
        year: ref_year,
    })
}

pub fn half_life_from_profile(buckets: &[u64]) -> Option<f64> {
    let total: u64 = buckets.iter().sum();
    if total == 0 {
        return None;
    }
    let half = total as f64 / 2.0;
    let mut prev = 0u64;
    for (i, &n) in buckets.iter().enumerate() {
        let age = (i + 1) as f64;
        let cum = prev + n;
        if cum as f64 >= half {
            if i == 0 {
                return Some(1.0);
            }
            return Some(age - 1.0 + (half - prev as f64) / n as f64);
        }
        prev = cum;
    }
    unreachable!("cumulative count reaches the total")
}

/// Journal-to-journal citation flow: `matrix[i][j]` counts citations from
/// journal `i` to journal `j`. The diagonal is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalFlowMatrix {
    pub journal_ids: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub article_fractions: Vec<f64>,
}

impl JournalFlowMatrix {
    pub fn new(journal_ids: Vec<String>, mut matrix: Vec<Vec<f64>>, article_fractions: Vec<f64>) -> MetricResult<Self> {
        let n = journal_ids.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) || article_fractions.len() != n {
            return Err(MetricError::MalformedMatrix(format!(
                "{n} journals but matrix/fractions dimensions disagree"
            )));
        }
        if matrix.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(MetricError::MalformedMatrix(
                "entries must be finite and nonnegative".into(),
            ));
        }
        if article_fractions.iter().any(|v| !v.is_finite() || *v < 0.0)
            || (article_fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(MetricError::MalformedMatrix("article fractions must sum to 1".into()));
        }
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Ok(Self {
            journal_ids,
            matrix,
            article_fractions,
        })
    }

    pub fn len(&self) -> usize {
        self.journal_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.journal_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowMatrixBuild {
    pub flow: JournalFlowMatrix,
    pub article_counts: BTreeMap<String, u64>,
    /// Papers naming a journal id missing from the corpus, skipped in lenient mode.
    pub skipped_papers: usize,
}

/// Counts `ref_year` citations between journals, targeting papers from
/// `[ref_year - window, ref_year - 1]`. Article fractions are proportional to
/// each journal's article count in the same window (uniform if all are zero).
pub fn build_flow_matrix(corpus: &Corpus, ref_year: i32, window: u32, strict: bool) -> MetricResult<FlowMatrixBuild> {
    check_window(window)?;
    let ids: Vec<String> = corpus.journals().map(|j| j.id.clone()).collect();
    if ids.is_empty() {
        return Err(MetricError::MalformedMatrix("corpus has no journals".into()));
    }
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let n = ids.len();
    let in_window = |y: i32| (ref_year - window as i32..ref_year).contains(&y);

    let mut unresolved = BTreeSet::new();
    let mut journal_of = |p: &PaperRecord| -> MetricResult<Option<usize>> {
        match p.journal_id.as_deref() {
            None => Ok(None),
            Some(j) => match index.get(j) {
                Some(&i) => Ok(Some(i)),
                None if strict => Err(CorpusError::UnknownJournal(j.to_string()).into()),
                None => {
                    unresolved.insert(p.id.clone());
                    Ok(None)
                }
            },
        }
    };

    let mut matrix = vec![vec![0.0; n]; n];
    let mut counts = vec![0u64; n];
    for p in corpus.papers() {
        let Some(j) = journal_of(p)? else { continue };
        if in_window(p.year) {
            counts[j] += 1;
        }
        for citer in corpus.cited_by(&p.id) {
            let citer = corpus.paper(citer)?;
            if citer.year != ref_year || !in_window(p.year) {
                continue;
            }
            if let Some(i) = journal_of(citer)? {
                if i != j {
                    matrix[i][j] += 1.0;
                }
            }
        }
    }
    let total: u64 = counts.iter().sum();
    let fractions = if total == 0 {
        vec![1.0 / n as f64; n]
    } else {
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    let article_counts = ids.iter().cloned().zip(counts).collect();
    Ok(FlowMatrixBuild {
        flow: JournalFlowMatrix::new(ids, matrix, fractions)?,
        article_counts,
        skipped_papers: unresolved.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenfactorParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenfactorParams {
    fn default() -> Self {
        Self {
            damping: 0.85,
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenfactorResult {
    pub scores: BTreeMap<String, f64>,
    pub iterations: usize,
    /// L1 change of the visit distribution after each iteration.
    pub residuals: Vec<f64>,
}

/// Damped eigenvector centrality of the self-citation-free flow network.
///
/// Each citing journal distributes its weight over cited journals in
/// proportion to its outgoing citations; journals citing nobody distribute by
/// article fraction, as does the `1 - damping` teleport share. Scores are the
/// citation flow into each journal under the stationary distribution, scaled
/// to sum to 100.
pub fn eigenfactor(flow: &JournalFlowMatrix, params: EigenfactorParams) -> MetricResult<EigenfactorResult> {
    let EigenfactorParams { damping, tol, max_iter } = params;
    if !(damping > 0.0 && damping < 1.0) {
        return Err(MetricError::InvalidParameter(format!(
            "damping must lie in (0,1), got {damping}"
        )));
    }
    let n = flow.len();
    let a = &flow.article_fractions;
    let z = &flow.matrix;
    let out: Vec<f64> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).map(|j| z[i][j]).sum())
        .collect();
    if out.iter().all(|&o| o == 0.0) {
        return Err(MetricError::DegenerateMatrix);
    }

    let cited_flow = |p: &[f64]| -> Vec<f64> {
        let mut f = vec![0.0; n];
        for i in (0..n).filter(|&i| out[i] > 0.0) {
            let share = p[i] / out[i];
            for j in (0..n).filter(|&j| j != i) {
                f[j] += share * z[i][j];
            }
        }
        f
    };

    let mut p = a.clone();
    let mut residuals = Vec::new();
    loop {
        if residuals.len() == max_iter {
            return Err(MetricError::NoConvergence { iterations: max_iter });
        }
        let dangling: f64 = (0..n).filter(|&i| out[i] == 0.0).map(|i| p[i]).sum();
        let f = cited_flow(&p);
        let next: Vec<f64> = (0..n)
            .map(|j| damping * (f[j] + dangling * a[j]) + (1.0 - damping) * a[j])
            .collect();
        let residual: f64 = next.iter().zip(&p).map(|(x, y)| (x - y).abs()).sum();
        p = next;
        residuals.push(residual);
        if residual < tol {
            break;
        }
    }

    let f = cited_flow(&p);
    let total: f64 = f.iter().sum();
    let scores = flow
        .journal_ids
        .iter()
        .cloned()
        .zip(f.iter().map(|x| 100.0 * x / total))
        .collect();
    Ok(EigenfactorResult {
        scores,
        iterations: residuals.len(),
        residuals,
    })
}

/// Eigenfactor per unit of article share: `EF_j / (articles_j / total)`.
/// Journals without articles have no defined influence and map to `None`.
pub fn article_influence(
    ef_scores: &BTreeMap<String, f64>,
    article_counts: &BTreeMap<String, u64>,
) -> MetricResult<BTreeMap<String, Option<f64>>> {
    if !ef_scores.keys().eq(article_counts.keys()) {
        return Err(MetricError::KeyMismatch);
    }
    let total: u64 = article_counts.values().sum();
    if total == 0 {
        return Err(MetricError::NoArticles);
    }
    Ok(ef_scores
        .iter()
        .map(|(j, ef)| {
            let n = article_counts[j];
            let ai = (n > 0).then(|| ef / (n as f64 / total as f64));
            (j.clone(), ai)
        })
        .collect())
}
