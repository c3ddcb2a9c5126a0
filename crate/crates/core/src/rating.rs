//! Multi-dimensional community ratings weighted by rater reputation.
//!
//! The [`RatingStore`] is a ledger: at most one live rating per user and
//! item, a monthly budget of rating points, per-user reputations in `[0, 1]`
//! and time-limited sanctions that drop a user's aggregation weight to zero.
//! It is mutated by one writer at a time; aggregation, reputation and anomaly
//! scans only read it.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reputation of a user nobody has evaluated yet.
pub const DEFAULT_REPUTATION: f64 = 0.5;

#[derive(Debug, Error)]
pub enum RatingError {
    #[error("unknown user `{0}`")]
    UnknownUser(String),
    #[error("user `{user}` has no rating points left for {month}")]
    BudgetExhausted { user: String, month: String },
    #[error("invalid score: {0}")]
    InvalidScore(String),
    #[error("invalid timestamp {0}")]
    InvalidTimestamp(i64),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("reputation iteration did not converge within {iterations} rounds")]
    NoConvergence { iterations: usize },
    #[error("ledger line {line}: {reason}")]
    Ledger { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = RatingError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingConfig {
    pub scale_min: i32,
    pub scale_max: i32,
    pub dimensions: BTreeSet<String>,
    /// Distinct items a user may rate per calendar month (UTC).
    pub monthly_budget: u32,
    /// Rating count at which display intensity stops growing.
    pub saturation_count: u32,
    /// Named dimension weightings, e.g. one per venue.
    #[serde(default)]
    pub venue_weights: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Default for RatingConfig {
    fn default() -> Self {
        Self {
            scale_min: 1,
            scale_max: 5,
            dimensions: ["controversy", "importance", "novelty", "readability"]
                .into_iter()
                .map(String::from)
                .collect(),
            monthly_budget: 30,
            saturation_count: 10,
            venue_weights: BTreeMap::new(),
        }
    }
}

impl RatingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scale_max <= self.scale_min {
            return Err(RatingError::InvalidParameter(format!(
                "scale [{}, {}] is empty",
                self.scale_min, self.scale_max
            )));
        }
        if self.dimensions.is_empty() {
            return Err(RatingError::InvalidParameter("no rating dimensions".into()));
        }
        if self.saturation_count == 0 {
            return Err(RatingError::InvalidParameter(
                "saturation count must be positive".into(),
            ));
        }
        for w in self.venue_weights.values() {
            self.check_weights(w)?;
        }
        Ok(())
    }

    /// Equal weight on every configured dimension.
    pub fn uniform_weights(&self) -> BTreeMap<String, f64> {
        self.dimensions.iter().map(|d| (d.clone(), 1.0)).collect()
    }

    fn check_weights(&self, w: &BTreeMap<String, f64>) -> Result<()> {
        if let Some(d) = w.keys().find(|d| !self.dimensions.contains(*d)) {
            return Err(RatingError::InvalidWeights(format!("unknown dimension `{d}`")));
        }
        if w.values().any(|v| !v.is_finite() || *v < 0.0) || !(w.values().sum::<f64>() > 0.0) {
            return Err(RatingError::InvalidWeights(
                "weights must be nonnegative with a positive sum".into(),
            ));
        }
        Ok(())
    }

    fn to_unit(&self, score: f64) -> f64 {
        (score - self.scale_min as f64) / (self.scale_max - self.scale_min) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingEvent {
    pub user_id: String,
    pub item_id: String,
    pub scores: BTreeMap<String, i32>,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredRating {
    pub event: RatingEvent,
    /// The rater was under sanction when this rating arrived.
    pub submitted_while_sanctioned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub replaced: bool,
    pub weightless: bool,
    pub month: String,
    pub spent: u32,
}

/// Calendar month of a timestamp, as `YYYY-MM` in UTC.
pub fn month_key(timestamp: i64) -> Result<String> {
    DateTime::<Utc>::from_timestamp(timestamp, 0)
        .filter(|_| timestamp >= 0)
        .map(|t| t.format("%Y-%m").to_string())
        .ok_or(RatingError::InvalidTimestamp(timestamp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingStore {
    config: RatingConfig,
    users: BTreeSet<String>,
    /// item -> user -> latest rating
    events: BTreeMap<String, BTreeMap<String, StoredRating>>,
    /// user -> month -> points spent
    budgets: BTreeMap<String, BTreeMap<String, u32>>,
    reputations: BTreeMap<String, f64>,
    /// user -> sanction end (exclusive), epoch seconds
    sanctions: BTreeMap<String, i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionAggregate {
    /// Reputation-weighted mean; `None` when every rater has weight zero.
    pub weighted_mean: Option<f64>,
    pub count: usize,
    /// Unweighted sample standard deviation (0 for fewer than two ratings).
    pub std: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemAggregate {
    pub item_id: String,
    pub per_dimension: BTreeMap<String, DimensionAggregate>,
    /// Venue-weighted combination of the defined dimension means.
    pub overall: Option<f64>,
}

/// Display intensity in `[0, 1]`: grows with the number of ratings up to
/// `saturation_count` and fades as their spread approaches half the scale.
pub fn intensity(count: usize, std: f64, scale_min: i32, scale_max: i32, saturation_count: u32) -> f64 {
    if count == 0 || saturation_count == 0 {
        return 0.0;
    }
    let volume = (count as f64 / saturation_count as f64).min(1.0);
    let half_range = (scale_max - scale_min) as f64 / 2.0;
    let agreement = if half_range > 0.0 {
        (1.0 - std / half_range).max(0.0)
    } else {
        1.0
    };
    volume * agreement
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReputationParams {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ReputationParams {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-9,
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReputationRun {
    pub reputations: BTreeMap<String, f64>,
    pub iterations: usize,
    pub max_change: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyParams {
    pub min_overlap: usize,
    pub z_threshold: f64,
}

impl Default for AnomalyParams {
    fn default() -> Self {
        Self {
            min_overlap: 10,
            z_threshold: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub user_id: String,
    /// Mean gap between the user's item score and the other raters' mean.
    pub deviation: f64,
    pub z_score: f64,
}

impl RatingStore {
    pub fn new(config: RatingConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            users: BTreeSet::new(),
            events: BTreeMap::new(),
            budgets: BTreeMap::new(),
            reputations: BTreeMap::new(),
            sanctions: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &RatingConfig {
        &self.config
    }

    pub fn register_user(&mut self, user: &str) {
        self.users.insert(user.to_string());
    }

    pub fn users(&self) -> &BTreeSet<String> {
        &self.users
    }

    pub fn items(&self) -> impl Iterator<Item = &String> {
        self.events.keys()
    }

    pub fn ratings_for(&self, item: &str) -> impl Iterator<Item = &StoredRating> {
        self.events.get(item).into_iter().flat_map(|m| m.values())
    }

    pub fn spent(&self, user: &str, month: &str) -> u32 {
        self.budgets.get(user).and_then(|m| m.get(month)).copied().unwrap_or(0)
    }

    pub fn reputation(&self, user: &str) -> f64 {
        self.reputations.get(user).copied().unwrap_or(DEFAULT_REPUTATION)
    }

    pub fn set_reputation(&mut self, user: &str, value: f64) -> Result<()> {
        if !self.users.contains(user) {
            return Err(RatingError::UnknownUser(user.to_string()));
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(RatingError::InvalidParameter(format!(
                "reputation {value} outside [0, 1]"
            )));
        }
        self.reputations.insert(user.to_string(), value);
        Ok(())
    }

    pub fn set_reputations(&mut self, values: &BTreeMap<String, f64>) -> Result<()> {
        values.iter().try_for_each(|(u, v)| self.set_reputation(u, *v))
    }

    pub fn sanction_end(&self, user: &str) -> Option<i64> {
        self.sanctions.get(user).copied()
    }

    pub fn is_sanctioned(&self, user: &str, now: i64) -> bool {
        self.sanctions.get(user).is_some_and(|&until| now < until)
    }

    /// Aggregation weight of `user` at time `now`.
    pub fn weight(&self, user: &str, now: i64) -> f64 {
        if self.is_sanctioned(user, now) {
            0.0
        } else {
            self.reputation(user)
        }
    }

    /// Records a rating. The first rating of an item spends one point of the
    /// event month's budget; a later rating of the same item replaces the
    /// earlier one for free. Ratings from sanctioned users are kept but
    /// reported as weightless.
    pub fn submit_rating(&mut self, event: RatingEvent) -> Result<SubmitOutcome> {
        if !self.users.contains(&event.user_id) {
            return Err(RatingError::UnknownUser(event.user_id));
        }
        if event.scores.is_empty() {
            return Err(RatingError::InvalidScore("rating has no scores".into()));
        }
        for (dim, &s) in &event.scores {
            if !self.config.dimensions.contains(dim) {
                return Err(RatingError::InvalidScore(format!("unknown dimension `{dim}`")));
            }
            if !(self.config.scale_min..=self.config.scale_max).contains(&s) {
                return Err(RatingError::InvalidScore(format!(
                    "{dim}={s} outside [{}, {}]",
                    self.config.scale_min, self.config.scale_max
                )));
            }
        }
        let month = month_key(event.timestamp)?;
        let replaced = self
            .events
            .get(&event.item_id)
            .is_some_and(|m| m.contains_key(&event.user_id));
        if !replaced {
            let spent = self.spent(&event.user_id, &month);
            if spent >= self.config.monthly_budget {
                return Err(RatingError::BudgetExhausted {
                    user: event.user_id,
                    month,
                });
            }
            *self
                .budgets
                .entry(event.user_id.clone())
                .or_default()
                .entry(month.clone())
                .or_default() += 1;
        }
        let weightless = self.is_sanctioned(&event.user_id, event.timestamp);
        let spent = self.spent(&event.user_id, &month);
        self.events.entry(event.item_id.clone()).or_default().insert(
            event.user_id.clone(),
            StoredRating {
                event,
                submitted_while_sanctioned: weightless,
            },
        );
        Ok(SubmitOutcome {
            replaced,
            weightless,
            month,
            spent,
        })
    }

    /// Zeroes the user's weight until `until`. A second sanction keeps
    /// whichever end lies later.
    pub fn apply_sanction(&mut self, user: &str, until: i64) -> Result<()> {
        if !self.users.contains(user) {
            return Err(RatingError::UnknownUser(user.to_string()));
        }
        let end = self.sanctions.entry(user.to_string()).or_insert(until);
        *end = (*end).max(until);
        Ok(())
    }

    fn dimension_aggregates(&self, item: &str, weight: &dyn Fn(&str) -> f64) -> BTreeMap<String, DimensionAggregate> {
        let mut by_dim: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for r in self.ratings_for(item) {
            let w = weight(&r.event.user_id);
            for (d, &s) in &r.event.scores {
                by_dim.entry(d).or_default().push((s as f64, w));
            }
        }
        by_dim
            .into_iter()
            .map(|(d, rs)| {
                let wsum: f64 = rs.iter().map(|(_, w)| w).sum();
                let weighted_mean = (wsum > 0.0).then(|| rs.iter().map(|(s, w)| s * w).sum::<f64>() / wsum);
                let scores: Vec<f64> = rs.iter().map(|(s, _)| *s).collect();
                let std = sample_std(&scores);
                let agg = DimensionAggregate {
                    weighted_mean,
                    count: rs.len(),
                    std,
                    intensity: intensity(
                        rs.len(),
                        std,
                        self.config.scale_min,
                        self.config.scale_max,
                        self.config.saturation_count,
                    ),
                };
                (d.to_string(), agg)
            })
            .collect()
    }

    fn combine(per_dimension: &BTreeMap<String, DimensionAggregate>, venue: &BTreeMap<String, f64>) -> Option<f64> {
        let (num, den) = per_dimension
            .iter()
            .filter_map(|(d, a)| Some((a.weighted_mean?, venue.get(d).copied().unwrap_or(0.0))))
            .fold((0.0, 0.0), |(n, s), (m, w)| (n + m * w, s + w));
        (den > 0.0).then(|| num / den)
    }

    /// Reputation-weighted summary of one item at time `now`. Unknown items
    /// yield an empty aggregate.
    pub fn aggregate_item(&self, item: &str, venue_weights: &BTreeMap<String, f64>, now: i64) -> Result<ItemAggregate> {
        self.config.check_weights(venue_weights)?;
        let per_dimension = self.dimension_aggregates(item, &|u| self.weight(u, now));
        let overall = Self::combine(&per_dimension, venue_weights);
        Ok(ItemAggregate {
            item_id: item.to_string(),
            per_dimension,
            overall,
        })
    }

    /// Damped fixed point of "a user's reputation is the rescaled mean
    /// overall score of the items they authored", where those scores are
    /// themselves weighted by rater reputation. Starts everyone at 0.5;
    /// users without rated items keep a raw value of 0.5. Sanctions in force
    /// at `now` zero the rater's weight. Does not modify the store.
    pub fn compute_reputation(
        &self,
        authored_items: &BTreeMap<String, Vec<String>>,
        params: ReputationParams,
        now: i64,
    ) -> Result<ReputationRun> {
        let ReputationParams { damping, tol, max_iter } = params;
        if !(damping > 0.0 && damping < 1.0) {
            return Err(RatingError::InvalidParameter(format!(
                "damping must lie in (0,1), got {damping}"
            )));
        }
        let dims = self.config.uniform_weights();
        let mut rep: BTreeMap<String, f64> = self
            .users
            .iter()
            .chain(authored_items.keys())
            .map(|u| (u.clone(), DEFAULT_REPUTATION))
            .collect();
        let items: BTreeSet<&String> = authored_items.values().flatten().collect();

        for iteration in 1..=max_iter {
            let weight = |u: &str| {
                if self.is_sanctioned(u, now) {
                    0.0
                } else {
                    rep.get(u).copied().unwrap_or(DEFAULT_REPUTATION)
                }
            };
            let overall: BTreeMap<&String, f64> = items
                .iter()
                .filter_map(|&it| Some((it, Self::combine(&self.dimension_aggregates(it, &weight), &dims)?)))
                .collect();
            let mut next = BTreeMap::new();
            let mut max_change: f64 = 0.0;
            for (user, &old) in &rep {
                let scores: Vec<f64> = authored_items
                    .get(user)
                    .into_iter()
                    .flatten()
                    .filter_map(|it| overall.get(it))
                    .map(|&s| self.config.to_unit(s))
                    .collect();
                let raw = if scores.is_empty() {
                    DEFAULT_REPUTATION
                } else {
                    scores.iter().sum::<f64>() / scores.len() as f64
                };
                let new = (damping * old + (1.0 - damping) * raw).clamp(0.0, 1.0);
                max_change = max_change.max((new - old).abs());
                next.insert(user.clone(), new);
            }
            rep = next;
            if max_change < tol {
                return Ok(ReputationRun {
                    reputations: rep,
                    iterations: iteration,
                    max_change,
                });
            }
        }
        Err(RatingError::NoConvergence { iterations: max_iter })
    }

    /// Each rater's plain item score: the mean of the dimensions they scored.
    fn item_scores(&self) -> BTreeMap<&str, BTreeMap<&str, f64>> {
        self.events
            .iter()
            .map(|(item, by_user)| {
                let scores = by_user
                    .iter()
                    .map(|(u, r)| {
                        let s = &r.event.scores;
                        (u.as_str(), s.values().map(|&v| v as f64).sum::<f64>() / s.len() as f64)
                    })
                    .collect();
                (item.as_str(), scores)
            })
            .collect()
    }

    /// Flags raters whose mean deviation from the other raters of the same
    /// items is an outlier among all eligible raters. Users with fewer than
    /// `min_overlap` co-rated items are not scored.
    pub fn detect_anomalies(&self, params: AnomalyParams) -> Vec<Anomaly> {
        let mut gaps: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for scores in self.item_scores().values().filter(|s| s.len() >= 2) {
            let total: f64 = scores.values().sum();
            let others = (scores.len() - 1) as f64;
            for (&u, &s) in scores {
                gaps.entry(u).or_default().push(s - (total - s) / others);
            }
        }
        let deviations: Vec<(&str, f64)> = gaps
            .into_iter()
            .filter(|(_, g)| g.len() >= params.min_overlap.max(1))
            .map(|(u, g)| (u, g.iter().sum::<f64>() / g.len() as f64))
            .collect();
        if deviations.len() < 2 {
            return Vec::new();
        }
        let n = deviations.len() as f64;
        let mean = deviations.iter().map(|(_, d)| d).sum::<f64>() / n;
        let std = (deviations.iter().map(|(_, d)| (d - mean).powi(2)).sum::<f64>() / n).sqrt();
        if !(std > 0.0) {
            return Vec::new();
        }
        deviations
            .into_iter()
            .map(|(u, d)| Anomaly {
                user_id: u.to_string(),
                deviation: d,
                z_score: (d - mean) / std,
            })
            .filter(|a| a.z_score.abs() > params.z_threshold)
            .collect()
    }

    pub fn snapshot_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_snapshot_json(s: &str) -> Result<Self> {
        let store: Self = serde_json::from_str(s)?;
        store.config.validate()?;
        Ok(store)
    }

    /// Applies one ledger entry.
    pub fn apply(&mut self, entry: LedgerEntry) -> Result<()> {
        match entry {
            LedgerEntry::Register { user_id } => self.register_user(&user_id),
            LedgerEntry::Rating(ev) => {
                self.submit_rating(ev)?;
            }
            LedgerEntry::Sanction { user_id, until } => self.apply_sanction(&user_id, until)?,
            LedgerEntry::Reputation { user_id, value } => self.set_reputation(&user_id, value)?,
        }
        Ok(())
    }

    /// Rebuilds a store from a `ratings.jsonl` event log.
    pub fn replay<R: BufRead>(config: RatingConfig, log: R) -> Result<Self> {
        let mut store = Self::new(config)?;
        for (i, line) in log.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let ledger_err = |reason: String| RatingError::Ledger { line: i + 1, reason };
            let entry: LedgerEntry = serde_json::from_str(&line).map_err(|e| ledger_err(e.to_string()))?;
            store.apply(entry).map_err(|e| ledger_err(e.to_string()))?;
        }
        Ok(store)
    }
}

/// One line of the append-only rating log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LedgerEntry {
    Register { user_id: String },
    Rating(RatingEvent),
    Sanction { user_id: String, until: i64 },
    Reputation { user_id: String, value: f64 },
}

impl LedgerEntry {
    pub fn append_to<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, self)?;
        out.write_all(b"\n")?;
        Ok(())
    }
}
