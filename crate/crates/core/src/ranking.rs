//! Pluralistic multi-criteria ranking: mean-normalized weighted scores, the
//! talent-weighted score that rewards a few outstanding criteria, and A/B/C
//! league classification by rank percentiles.
//!
//! These scores are meant for preselection. Nothing here persists a verdict.

use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficient of the sorted-surplus correction in [`talent_score`].
pub const TALENT_COEFFICIENT: f64 = 0.1;
/// Number of criteria the talent score is defined for.
pub const TALENT_ARITY: usize = 4;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("criterion `{0}` has zero mean and cannot be normalized")]
    ZeroMeanCriterion(String),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("talent score needs exactly {TALENT_ARITY} criteria, got {0}")]
    WrongArity(usize),
    #[error("score matrix has no candidates or no criteria")]
    EmptyMatrix,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid league thresholds: {0}")]
    InvalidThresholds(String),
    #[error("invalid score matrix: {0}")]
    InvalidMatrix(String),
    #[error("csv line {line}: {reason}")]
    Csv { line: u64, reason: String },
}

pub type Result<T, E = RankingError> = std::result::Result<T, E>;

/// Candidates × criteria performance values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    candidate_ids: Vec<String>,
    criteria_ids: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(candidate_ids: Vec<String>, criteria_ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != candidate_ids.len() {
            return Err(RankingError::InvalidMatrix(format!(
                "{} candidates but {} rows",
                candidate_ids.len(),
                values.len()
            )));
        }
        if let Some(row) = values.iter().find(|r| r.len() != criteria_ids.len()) {
            return Err(RankingError::LengthMismatch {
                expected: criteria_ids.len(),
                got: row.len(),
            });
        }
        if values.iter().flatten().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RankingError::InvalidMatrix(
                "values must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            candidate_ids,
            criteria_ids,
            values,
        })
    }

    /// Parses CSV whose header row names the criteria after a leading
    /// candidate column, and whose first column holds candidate ids.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let csv_err = |e: csv::Error| RankingError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        };
        let header = rdr.headers().map_err(csv_err)?.clone();
        let criteria: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line());
            ids.push(rec.get(0).unwrap_or_default().trim().to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|e| RankingError::Csv {
                        line,
                        reason: format!("`{v}`: {e}"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
        }
        Self::new(ids, criteria, values)
    }

    pub fn candidate_ids(&self) -> &[String] {
        &self.candidate_ids
    }

    pub fn criteria_ids(&self) -> &[String] {
        &self.criteria_ids
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, candidate: usize) -> &[f64] {
        &self.values[candidate]
    }

    pub fn set(&mut self, candidate: usize, criterion: usize, value: f64) {
        self.values[candidate][criterion] = value;
    }

    fn column(&self, criterion: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |r| r[criterion])
    }
}

/// Nonnegative per-criterion weights with a positive sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(RankingError::InvalidWeights(
                "weights must be finite and nonnegative".into(),
            ));
        }
        if !(weights.iter().sum::<f64>() > 0.0) {
            return Err(RankingError::InvalidWeights("weights must have a positive sum".into()));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Divides every value by its criterion's mean, so each column averages 1.
pub fn normalize_scores(matrix: &ScoreMatrix) -> Result<ScoreMatrix> {
    let n = matrix.candidate_ids.len();
    if n == 0 || matrix.criteria_ids.is_empty() {
        return Err(RankingError::EmptyMatrix);
    }
    let means = (0..matrix.criteria_ids.len())
        .map(|j| {
            let mean = matrix.column(j).sum::<f64>() / n as f64;
            if mean > 0.0 {
                Ok(mean)
            } else {
                Err(RankingError::ZeroMeanCriterion(matrix.criteria_ids[j].clone()))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = matrix
        .values
        .iter()
        .map(|r| r.iter().zip(&means).map(|(v, m)| v / m).collect())
        .collect();
    Ok(ScoreMatrix {
        values,
        ..matrix.clone()
    })
}

/// `Σ w_i x_i`.
pub fn weighted_score(x: &[f64], w: &WeightVector) -> Result<f64> {
    if x.len() != w.len() {
        return Err(RankingError::LengthMismatch {
            expected: w.len(),
            got: x.len(),
        });
    }
    Ok(x.iter().zip(w.as_slice()).map(|(x, w)| x * w).sum())
}

/// Weighted score plus `0.1 (y1 + y2 - y3 - y4)`, where `y` is `x` sorted in
/// descending order. Defined for exactly four criteria.
pub fn talent_score(x: &[f64], w: &WeightVector) -> Result<f64> {
    if x.len() != TALENT_ARITY {
        return Err(RankingError::WrongArity(x.len()));
    }
    if w.len() != TALENT_ARITY {
        return Err(RankingError::WrongArity(w.len()));
    }
    let base = weighted_score(x, w)?;
    let mut y = x.to_vec();
    y.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(base + TALENT_COEFFICIENT * (y[0] + y[1] - y[2] - y[3]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum League {
    A,
    B,
    C,
    #[serde(rename = "unranked")]
    Unranked,
}

impl std::fmt::Display for League {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            League::A => "A",
            League::B => "B",
            League::C => "C",
            League::Unranked => "unranked",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeagueAssignment {
    pub candidate_id: String,
    pub league: League,
}

/// Percentages `y` for the A, B and C leagues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeagueThresholds {
    pub y_a: f64,
    pub y_b: f64,
    pub y_c: f64,
}

impl LeagueThresholds {
    /// `y_b = 2 y_a`, `y_c = 3 y_a`, capped at 100.
    pub fn from_a(y_a: f64) -> Self {
        Self {
            y_a,
            y_b: (2.0 * y_a).min(100.0),
            y_c: (3.0 * y_a).min(100.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let Self { y_a, y_b, y_c } = *self;
        if 0.0 < y_a && y_a <= y_b && y_b <= y_c && y_c <= 100.0 {
            Ok(())
        } else {
            Err(RankingError::InvalidThresholds(format!(
                "need 0 < y_a <= y_b <= y_c <= 100, got {y_a}, {y_b}, {y_c}"
            )))
        }
    }
}

impl Default for LeagueThresholds {
    fn default() -> Self {
        Self::from_a(10.0)
    }
}

/// Competition ranks per criterion (1 = best, ties share the better rank).
fn criterion_ranks(matrix: &ScoreMatrix) -> Vec<Vec<usize>> {
    let n = matrix.candidate_ids.len();
    (0..n)
        .map(|i| {
            (0..matrix.criteria_ids.len())
                .map(|j| {
                    let v = matrix.values[i][j];
                    1 + matrix.column(j).filter(|&o| o > v).count()
                })
                .collect()
        })
        .collect()
}

/// Largest rank inside the top `p` percent of `n` candidates.
fn rank_cutoff(p: f64, n: usize) -> usize {
    // guard against 10 * 10 / 100 landing a hair above 1
    ((p.min(100.0) * n as f64 / 100.0) - 1e-9).ceil().max(0.0) as usize
}

fn qualifies(ranks: &[usize], y: f64, n: usize) -> bool {
    (1..=3).any(|k| {
        let cutoff = rank_cutoff(k as f64 * y, n);
        ranks.iter().filter(|&&r| r <= cutoff).count() >= k
    })
}

/// Assigns each candidate the best league whose standard they meet: within
/// the top `y`% on one criterion, the top `2y`% on two, or the top `3y`% on
/// three, using that league's `y`.
pub fn league_classify(matrix: &ScoreMatrix, thresholds: LeagueThresholds) -> Result<Vec<LeagueAssignment>> {
    thresholds.validate()?;
    let n = matrix.candidate_ids.len();
    if n == 0 || matrix.criteria_ids.is_empty() {
        return Err(RankingError::EmptyMatrix);
    }
    let ranks = criterion_ranks(matrix);
    Ok(matrix
        .candidate_ids
        .iter()
        .zip(&ranks)
        .map(|(id, r)| {
            let league = [
                (League::A, thresholds.y_a),
                (League::B, thresholds.y_b),
                (League::C, thresholds.y_c),
            ]
            .into_iter()
            .find(|&(_, y)| qualifies(r, y, n))
            .map_or(League::Unranked, |(l, _)| l);
            LeagueAssignment {
                candidate_id: id.clone(),
                league,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreMode {
    Weighted,
    Talent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub rank: usize,
    pub candidate_id: String,
    pub score: f64,
}

/// Normalizes the matrix and orders candidates by score, best first; equal
/// scores share a rank and are listed by id.
pub fn rank_candidates(matrix: &ScoreMatrix, w: &WeightVector, mode: ScoreMode) -> Result<Vec<RankedCandidate>> {
    let norm = normalize_scores(matrix)?;
    let mut scored = norm
        .candidate_ids
        .iter()
        .zip(&norm.values)
        .map(|(id, x)| {
            let s = match mode {
                ScoreMode::Weighted => weighted_score(x, w)?,
                ScoreMode::Talent => talent_score(x, w)?,
            };
            Ok((id.clone(), s))
        })
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut out: Vec<RankedCandidate> = Vec::with_capacity(scored.len());
    for (i, (id, score)) in scored.into_iter().enumerate() {
        let rank = match out.last() {
            Some(prev) if prev.score == score => prev.rank,
            _ => i + 1,
        };
        out.push(RankedCandidate {
            rank,
            candidate_id: id,
            score,
        });
    }
    Ok(out)
}
