//! Manuscript review lifecycle.
//!
//! ```text
//! Archived -> UnderReview -> RevisionRequested -> Revised -> Published
//!                  |                                  |
//!                  +--> ArchivedRejected <------------+
//! ```
//!
//! A round collects a fixed number of referee reports. The manuscript goes to
//! revision when at least one report is positive and comes from a referee
//! whose reputation reaches the threshold; otherwise it stays in the archive
//! as rejected. Nothing is ever deleted: rejected manuscripts remain readable.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReviewError {
    #[error("manuscript `{0}` already exists")]
    DuplicateManuscript(String),
    #[error("unknown manuscript `{0}`")]
    UnknownManuscript(String),
    #[error("`{op}` is not allowed in state {state:?}")]
    InvalidTransition { op: &'static str, state: ManuscriptState },
    #[error("referee `{0}` already reported this round")]
    DuplicateReferee(String),
    #[error("round already has {0} reports")]
    RoundFull(usize),
    #[error("round has {got} of {needed} reports")]
    IncompleteRound { got: usize, needed: usize },
    #[error("review log line {line}: {reason}")]
    Log { line: usize, reason: String },
}

pub type Result<T, E = ReviewError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ManuscriptState {
    Archived,
    UnderReview,
    RevisionRequested,
    Revised,
    Published,
    ArchivedRejected,
}

impl ManuscriptState {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Published | Self::ArchivedRejected)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefereeReport {
    pub referee_id: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub text: String,
    pub timestamp: i64,
}

/// Review submitted by a reader. Kept with the manuscript, never a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReaderComment {
    pub reader_id: String,
    pub text: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReviewConfig {
    pub round_size: usize,
    pub reputation_threshold: f64,
    /// Let a revised manuscript go back under review instead of straight to
    /// the editorial decision.
    pub allow_repeat_rounds: bool,
}

impl Default for ReviewConfig {
    fn default() -> Self {
        Self {
            round_size: 3,
            reputation_threshold: 0.5,
            allow_repeat_rounds: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: ManuscriptState,
    pub to: ManuscriptState,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManuscriptWorkflow {
    pub manuscript_id: String,
    pub state: ManuscriptState,
    /// Reports of the current round.
    pub reports: Vec<RefereeReport>,
    pub round: u32,
    /// Reports of finished rounds, published alongside an accepted paper.
    pub past_rounds: Vec<Vec<RefereeReport>>,
    pub author_replies: Vec<String>,
    pub reader_comments: Vec<ReaderComment>,
    /// Some round passed the reputation-gated report evaluation.
    pub passed_review: bool,
}

impl ManuscriptWorkflow {
    pub fn new(manuscript_id: impl Into<String>) -> Self {
        Self {
            manuscript_id: manuscript_id.into(),
            state: ManuscriptState::Archived,
            reports: Vec::new(),
            round: 1,
            past_rounds: Vec::new(),
            author_replies: Vec::new(),
            reader_comments: Vec::new(),
            passed_review: false,
        }
    }

    fn require(&self, op: &'static str, ok: bool) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(ReviewError::InvalidTransition { op, state: self.state })
        }
    }

    fn move_to(&mut self, to: ManuscriptState, cause: impl Into<String>) -> Transition {
        let from = std::mem::replace(&mut self.state, to);
        Transition {
            from,
            to,
            cause: cause.into(),
        }
    }

    pub fn select_for_review(&mut self, config: &ReviewConfig) -> Result<Transition> {
        use ManuscriptState::*;
        let repeat = config.allow_repeat_rounds && self.state == Revised;
        self.require("select_for_review", self.state == Archived || repeat)?;
        Ok(self.move_to(
            UnderReview,
            if repeat {
                "selected for another round"
            } else {
                "selected for review"
            },
        ))
    }

    pub fn record_report(&mut self, report: RefereeReport, config: &ReviewConfig) -> Result<()> {
        self.require("record_report", self.state == ManuscriptState::UnderReview)?;
        if self.reports.iter().any(|r| r.referee_id == report.referee_id) {
            return Err(ReviewError::DuplicateReferee(report.referee_id));
        }
        if self.reports.len() >= config.round_size {
            return Err(ReviewError::RoundFull(self.reports.len()));
        }
        self.reports.push(report);
        Ok(())
    }

    /// The referee of the first positive report whose reputation reaches
    /// `threshold`, if any. Referees without a known reputation count as 0.
    pub fn qualifying_referee<'a>(&'a self, reputations: &BTreeMap<String, f64>, threshold: f64) -> Option<&'a str> {
        self.reports
            .iter()
            .find(|r| {
                r.verdict == Verdict::Positive && reputations.get(&r.referee_id).copied().unwrap_or(0.0) >= threshold
            })
            .map(|r| r.referee_id.as_str())
    }

    pub fn evaluate_reports(
        &mut self,
        reputations: &BTreeMap<String, f64>,
        threshold: f64,
        config: &ReviewConfig,
    ) -> Result<Transition> {
        self.require("evaluate_reports", self.state == ManuscriptState::UnderReview)?;
        if self.reports.len() != config.round_size {
            return Err(ReviewError::IncompleteRound {
                got: self.reports.len(),
                needed: config.round_size,
            });
        }
        Ok(match self.qualifying_referee(reputations, threshold) {
            Some(referee) => {
                let cause = format!("positive report by {referee} with sufficient reputation");
                self.passed_review = true;
                self.move_to(ManuscriptState::RevisionRequested, cause)
            }
            None => self.move_to(ManuscriptState::ArchivedRejected, "no qualifying positive report"),
        })
    }

    pub fn submit_revision(&mut self, reply: Option<String>) -> Result<Transition> {
        self.require("submit_revision", self.state == ManuscriptState::RevisionRequested)?;
        self.past_rounds.push(std::mem::take(&mut self.reports));
        self.author_replies.extend(reply);
        self.round += 1;
        Ok(self.move_to(ManuscriptState::Revised, "revision submitted"))
    }

    pub fn editorial_decision(&mut self, accept: bool) -> Result<Transition> {
        self.require(
            "editorial_decision",
            self.state == ManuscriptState::Revised && self.passed_review,
        )?;
        Ok(if accept {
            self.move_to(ManuscriptState::Published, "editorial board accepted")
        } else {
            self.move_to(ManuscriptState::ArchivedRejected, "editorial board rejected")
        })
    }

    pub fn add_reader_comment(&mut self, comment: ReaderComment) {
        self.reader_comments.push(comment);
    }
}

/// One line of the workflow audit log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub manuscript_id: String,
    /// `None` for the submission that creates the manuscript.
    pub from: Option<ManuscriptState>,
    pub to: ManuscriptState,
    pub timestamp: i64,
    pub cause: String,
}

/// All manuscripts of a venue plus the audit trail of their transitions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReviewBoard {
    pub config: ReviewConfig,
    manuscripts: BTreeMap<String, ManuscriptWorkflow>,
    audit: Vec<AuditEntry>,
}

/// One line of a review event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ReviewCommand {
    Submit {
        manuscript_id: String,
        timestamp: i64,
    },
    Select {
        manuscript_id: String,
        timestamp: i64,
    },
    Report {
        manuscript_id: String,
        referee_id: String,
        verdict: Verdict,
        #[serde(default)]
        text: String,
        timestamp: i64,
    },
    Evaluate {
        manuscript_id: String,
        reputations: BTreeMap<String, f64>,
        #[serde(default)]
        threshold: Option<f64>,
        timestamp: i64,
    },
    Revise {
        manuscript_id: String,
        #[serde(default)]
        reply: Option<String>,
        timestamp: i64,
    },
    Decide {
        manuscript_id: String,
        accept: bool,
        timestamp: i64,
    },
    Comment {
        manuscript_id: String,
        reader_id: String,
        text: String,
        timestamp: i64,
    },
}

impl ReviewBoard {
    pub fn new(config: ReviewConfig) -> Self {
        Self {
            config,
            ..Default::default()
        }
    }

    pub fn manuscript(&self, id: &str) -> Result<&ManuscriptWorkflow> {
        self.manuscripts
            .get(id)
            .ok_or_else(|| ReviewError::UnknownManuscript(id.to_string()))
    }

    pub fn manuscripts(&self) -> impl Iterator<Item = &ManuscriptWorkflow> {
        self.manuscripts.values()
    }

    pub fn audit(&self) -> &[AuditEntry] {
        &self.audit
    }

    pub fn submit_manuscript(&mut self, id: &str, timestamp: i64) -> Result<&ManuscriptWorkflow> {
        if self.manuscripts.contains_key(id) {
            return Err(ReviewError::DuplicateManuscript(id.to_string()));
        }
        let wf = ManuscriptWorkflow::new(id);
        self.audit.push(AuditEntry {
            manuscript_id: id.to_string(),
            from: None,
            to: wf.state,
            timestamp,
            cause: "submitted to archive".into(),
        });
        Ok(self.manuscripts.entry(id.to_string()).or_insert(wf))
    }

    fn with<F>(&mut self, id: &str, timestamp: i64, op: F) -> Result<()>
    where
        F: FnOnce(&mut ManuscriptWorkflow, &ReviewConfig) -> Result<Option<Transition>>,
    {
        let config = self.config;
        let wf = self
            .manuscripts
            .get_mut(id)
            .ok_or_else(|| ReviewError::UnknownManuscript(id.to_string()))?;
        if let Some(t) = op(wf, &config)? {
            self.audit.push(AuditEntry {
                manuscript_id: id.to_string(),
                from: Some(t.from),
                to: t.to,
                timestamp,
                cause: t.cause,
            });
        }
        Ok(())
    }

    pub fn apply(&mut self, cmd: ReviewCommand) -> Result<()> {
        match cmd {
            ReviewCommand::Submit {
                manuscript_id,
                timestamp,
            } => self.submit_manuscript(&manuscript_id, timestamp).map(drop),
            ReviewCommand::Select {
                manuscript_id,
                timestamp,
            } => self.with(&manuscript_id, timestamp, |wf, c| wf.select_for_review(c).map(Some)),
            ReviewCommand::Report {
                manuscript_id,
                referee_id,
                verdict,
                text,
                timestamp,
            } => self.with(&manuscript_id, timestamp, |wf, c| {
                let report = RefereeReport {
                    referee_id,
                    verdict,
                    text,
                    timestamp,
                };
                wf.record_report(report, c).map(|_| None)
            }),
            ReviewCommand::Evaluate {
                manuscript_id,
                reputations,
                threshold,
                timestamp,
            } => self.with(&manuscript_id, timestamp, |wf, c| {
                let threshold = threshold.unwrap_or(c.reputation_threshold);
                wf.evaluate_reports(&reputations, threshold, c).map(Some)
            }),
            ReviewCommand::Revise {
                manuscript_id,
                reply,
                timestamp,
            } => self.with(&manuscript_id, timestamp, |wf, _| wf.submit_revision(reply).map(Some)),
            ReviewCommand::Decide {
                manuscript_id,
                accept,
                timestamp,
            } => self.with(&manuscript_id, timestamp, |wf, _| {
                wf.editorial_decision(accept).map(Some)
            }),
            ReviewCommand::Comment {
                manuscript_id,
                reader_id,
                text,
                timestamp,
            } => self.with(&manuscript_id, timestamp, |wf, _| {
                wf.add_reader_comment(ReaderComment {
                    reader_id,
                    text,
                    timestamp,
                });
                Ok(None)
            }),
        }
    }

    /// Replays a JSONL review event log, stopping at the first bad line.
    pub fn replay<R: BufRead>(config: ReviewConfig, log: R) -> Result<Self> {
        let mut board = Self::new(config);
        for (i, line) in log.lines().enumerate() {
            let log_err = |reason: String| ReviewError::Log { line: i + 1, reason };
            let line = line.map_err(|e| log_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cmd: ReviewCommand = serde_json::from_str(&line).map_err(|e| log_err(e.to_string()))?;
            board.apply(cmd).map_err(|e| log_err(e.to_string()))?;
        }
        Ok(board)
    }

    pub fn write_audit_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for entry in &self.audit {
            serde_json::to_writer(&mut out, entry)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
