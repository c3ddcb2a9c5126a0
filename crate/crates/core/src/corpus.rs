//! Scholarly corpus: JSONL ingestion, validation and the citation index.
//!
//! A [`Corpus`] is immutable once built. Every metric module reads it through
//! shared references, so it can be handed to any number of threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_YEAR: i32 = 1500;
pub const MAX_YEAR: i32 = 3000;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    Parse { file: String, line: usize, reason: String },
    #[error("invalid record `{id}`: {reason}")]
    InvalidRecord { id: String, reason: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("paper `{paper}` references unknown paper `{reference}`")]
    DanglingReference { paper: String, reference: String },
    #[error("cannot tell record kind of {0} (expected papers/authors/journals/downloads .jsonl)")]
    UnknownFileKind(PathBuf),
    #[error("no corpus files in {0}")]
    NoCorpusFiles(PathBuf),
    #[error("unknown paper `{0}`")]
    UnknownPaper(String),
    #[error("unknown author `{0}`")]
    UnknownAuthor(String),
    #[error("unknown journal `{0}`")]
    UnknownJournal(String),
    #[error("paper year {year} is after the evaluation year {now_year}")]
    FutureDated { year: i32, now_year: i32 },
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub author_ids: Vec<String>,
    #[serde(default)]
    pub journal_id: Option<String>,
    #[serde(default)]
    pub field_id: Option<String>,
    pub year: i32,
    #[serde(default)]
    pub tags: BTreeSet<String>,
    #[serde(default)]
    pub references: Vec<String>,
}

impl PaperRecord {
    const KEYS: &'static [&'static str] = &[
        "id",
        "title",
        "author_ids",
        "journal_id",
        "field_id",
        "year",
        "tags",
        "references",
    ];

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty paper id".into());
        }
        if self.author_ids.is_empty() {
            return Err("paper has no authors".into());
        }
        if !(MIN_YEAR..=MAX_YEAR).contains(&self.year) {
            return Err(format!("year {} outside [{MIN_YEAR}, {MAX_YEAR}]", self.year));
        }
        let mut seen = BTreeSet::new();
        for r in &self.references {
            if !seen.insert(r.as_str()) {
                return Err(format!("duplicate reference `{r}`"));
            }
        }
        Ok(())
    }

    /// Age in years at `now_year`; a paper published in `now_year` has age 1.
    pub fn age(&self, now_year: i32) -> Result<u32> {
        paper_age(self.year, now_year)
    }
}

pub fn paper_age(year: i32, now_year: i32) -> Result<u32> {
    if now_year < year {
        return Err(CorpusError::FutureDated { year, now_year });
    }
    Ok((now_year - year + 1) as u32)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub id: String,
    #[serde(default)]
    pub name: String,
}

impl AuthorRecord {
    const KEYS: &'static [&'static str] = &["id", "name"];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalRecord {
    pub id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub field_id: Option<String>,
}

impl JournalRecord {
    const KEYS: &'static [&'static str] = &["id", "name", "field_id"];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DownloadEvent {
    pub user_id: String,
    pub paper_id: String,
    pub timestamp: i64,
}

impl DownloadEvent {
    const KEYS: &'static [&'static str] = &["user_id", "paper_id", "timestamp"];
}

/// Counters for tolerated irregularities seen while loading.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadWarnings {
    pub unknown_keys: usize,
    pub skipped_downloads: usize,
}

/// Raw records, before indexing.
#[derive(Debug, Clone, Default)]
pub struct CorpusRecords {
    pub papers: Vec<PaperRecord>,
    pub authors: Vec<AuthorRecord>,
    pub journals: Vec<JournalRecord>,
    pub downloads: Vec<DownloadEvent>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    papers: BTreeMap<String, PaperRecord>,
    authors: BTreeMap<String, AuthorRecord>,
    journals: BTreeMap<String, JournalRecord>,
    downloads: Vec<DownloadEvent>,
    cited_by: BTreeMap<String, Vec<String>>,
    dangling_refs: BTreeSet<String>,
    dangling_occurrences: usize,
    by_author: BTreeMap<String, Vec<String>>,
    by_journal: BTreeMap<String, Vec<String>>,
    warnings: LoadWarnings,
}

impl Default for Corpus {
    fn default() -> Self {
        Self::from_records(CorpusRecords::default(), false).expect("empty corpus is valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FileKind {
    Papers,
    Authors,
    Journals,
    Downloads,
}

impl FileKind {
    fn of(path: &Path) -> Option<Self> {
        let stem = path.file_stem()?.to_str()?;
        [
            ("papers", Self::Papers),
            ("authors", Self::Authors),
            ("journals", Self::Journals),
            ("downloads", Self::Downloads),
        ]
        .into_iter()
        .find(|(prefix, _)| stem.starts_with(prefix))
        .map(|(_, k)| k)
    }
}

/// Loads corpus files. The record kind of each file is taken from its name
/// (`papers*.jsonl`, `authors*.jsonl`, `journals*.jsonl`, `downloads*.jsonl`).
pub fn load_corpus<P: AsRef<Path>>(paths: &[P], strict: bool) -> Result<Corpus> {
    let mut records = CorpusRecords::default();
    let mut unknown_keys = 0;
    for path in paths {
        let path = path.as_ref();
        let kind = FileKind::of(path).ok_or_else(|| CorpusError::UnknownFileKind(path.into()))?;
        match kind {
            FileKind::Papers => {
                for (line, p) in read_jsonl::<PaperRecord>(path, PaperRecord::KEYS, &mut unknown_keys)? {
                    p.validate().map_err(|reason| parse_err(path, line, reason))?;
                    records.papers.push(p);
                }
            }
            FileKind::Authors => records.authors.extend(
                read_jsonl::<AuthorRecord>(path, AuthorRecord::KEYS, &mut unknown_keys)?
                    .into_iter()
                    .map(|(_, a)| a),
            ),
            FileKind::Journals => records.journals.extend(
                read_jsonl::<JournalRecord>(path, JournalRecord::KEYS, &mut unknown_keys)?
                    .into_iter()
                    .map(|(_, j)| j),
            ),
            FileKind::Downloads => {
                for (line, d) in read_jsonl::<DownloadEvent>(path, DownloadEvent::KEYS, &mut unknown_keys)? {
                    if d.timestamp < 0 {
                        return Err(parse_err(path, line, "negative timestamp".into()));
                    }
                    records.downloads.push(d);
                }
            }
        }
    }
    let mut corpus = Corpus::from_records(records, strict)?;
    corpus.warnings.unknown_keys = unknown_keys;
    Ok(corpus)
}

/// Loads whichever of the four standard corpus files exist in `dir`.
pub fn load_corpus_dir(dir: &Path, strict: bool) -> Result<Corpus> {
    let files = corpus_files_in(dir)?;
    if files.is_empty() {
        return Err(CorpusError::NoCorpusFiles(dir.into()));
    }
    load_corpus(&files, strict)
}

pub fn corpus_files_in(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.into(),
        source,
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "jsonl") && FileKind::of(p).is_some())
        .collect();
    files.sort();
    Ok(files)
}

fn parse_err(path: &Path, line: usize, reason: String) -> CorpusError {
    CorpusError::Parse {
        file: path.display().to_string(),
        line,
        reason,
    }
}

fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    known_keys: &[&str],
    unknown_keys: &mut usize,
) -> Result<Vec<(usize, T)>> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.into(),
        source,
    })?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| parse_err(path, lineno, e.to_string()))?;
        if lineno == 1 && line.starts_with('\u{feff}') {
            return Err(parse_err(path, lineno, "byte order mark not allowed".into()));
        }
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let Some(obj) = value.as_object() else {
            return Err(parse_err(path, lineno, "expected a JSON object".into()));
        };
        *unknown_keys += obj.keys().filter(|k| !known_keys.contains(&k.as_str())).count();
        let record = serde_json::from_value(value).map_err(|e| parse_err(path, lineno, e.to_string()))?;
        out.push((lineno, record));
    }
    Ok(out)
}

impl Corpus {
    /// Validates and indexes raw records. In strict mode unresolved references
    /// and downloads of unknown papers are errors; otherwise references are
    /// collected in [`Corpus::dangling_refs`] and such downloads are dropped.
    pub fn from_records(records: CorpusRecords, strict: bool) -> Result<Self> {
        let mut papers = BTreeMap::new();
        for mut p in records.papers {
            p.validate().map_err(|reason| CorpusError::InvalidRecord {
                id: p.id.clone(),
                reason,
            })?;
            p.tags = p.tags.into_iter().map(|t| t.to_lowercase()).collect();
            if papers.contains_key(&p.id) {
                return Err(CorpusError::DuplicateId(p.id));
            }
            papers.insert(p.id.clone(), p);
        }
        let mut authors = BTreeMap::new();
        for a in records.authors {
            if authors.contains_key(&a.id) {
                return Err(CorpusError::DuplicateId(a.id));
            }
            authors.insert(a.id.clone(), a);
        }
        let mut journals = BTreeMap::new();
        for j in records.journals {
            if journals.contains_key(&j.id) {
                return Err(CorpusError::DuplicateId(j.id));
            }
            journals.insert(j.id.clone(), j);
        }

        let mut cited_by: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut dangling_refs = BTreeSet::new();
        let mut dangling_occurrences = 0;
        let mut by_author: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut by_journal: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for p in papers.values() {
            for r in &p.references {
                if papers.contains_key(r) {
                    cited_by.entry(r.clone()).or_default().push(p.id.clone());
                } else if strict {
                    return Err(CorpusError::DanglingReference {
                        paper: p.id.clone(),
                        reference: r.clone(),
                    });
                } else {
                    dangling_refs.insert(r.clone());
                    dangling_occurrences += 1;
                }
            }
            for a in &p.author_ids {
                let list = by_author.entry(a.clone()).or_default();
                // an author listed twice on one paper still owns it once
                if list.last() != Some(&p.id) {
                    list.push(p.id.clone());
                }
            }
            if let Some(j) = &p.journal_id {
                by_journal.entry(j.clone()).or_default().push(p.id.clone());
            }
        }

        let mut warnings = LoadWarnings::default();
        let mut downloads = Vec::with_capacity(records.downloads.len());
        for d in records.downloads {
            if papers.contains_key(&d.paper_id) {
                downloads.push(d);
            } else if strict {
                return Err(CorpusError::UnknownPaper(d.paper_id));
            } else {
                warnings.skipped_downloads += 1;
            }
        }

        Ok(Self {
            papers,
            authors,
            journals,
            downloads,
            cited_by,
            dangling_refs,
            dangling_occurrences,
            by_author,
            by_journal,
            warnings,
        })
    }

    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }

    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    pub fn paper(&self, id: &str) -> Result<&PaperRecord> {
        self.papers
            .get(id)
            .ok_or_else(|| CorpusError::UnknownPaper(id.to_string()))
    }

    pub fn authors(&self) -> impl Iterator<Item = &AuthorRecord> {
        self.authors.values()
    }

    /// Every author id known to the corpus, whether declared in an authors
    /// file or only named on a paper.
    pub fn author_ids(&self) -> BTreeSet<&str> {
        self.authors
            .keys()
            .chain(self.by_author.keys())
            .map(String::as_str)
            .collect()
    }

    pub fn has_author(&self, id: &str) -> bool {
        self.authors.contains_key(id) || self.by_author.contains_key(id)
    }

    pub fn journals(&self) -> impl Iterator<Item = &JournalRecord> {
        self.journals.values()
    }

    pub fn journal(&self, id: &str) -> Result<&JournalRecord> {
        self.journals
            .get(id)
            .ok_or_else(|| CorpusError::UnknownJournal(id.to_string()))
    }

    /// Papers whose `journal_id` is `journal`, in id order.
    pub fn journal_papers(&self, journal: &str) -> impl Iterator<Item = &PaperRecord> {
        self.by_journal
            .get(journal)
            .into_iter()
            .flatten()
            .map(move |id| &self.papers[id])
    }

    /// The paper's own field, falling back to its journal's field.
    pub fn paper_field<'a>(&'a self, paper: &'a PaperRecord) -> Option<&'a str> {
        paper.field_id.as_deref().or_else(|| {
            paper
                .journal_id
                .as_ref()
                .and_then(|j| self.journals.get(j))
                .and_then(|j| j.field_id.as_deref())
        })
    }

    pub fn downloads(&self) -> &[DownloadEvent] {
        &self.downloads
    }

    /// Ids of the papers citing `paper`, in id order.
    pub fn cited_by(&self, paper: &str) -> &[String] {
        self.cited_by.get(paper).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn dangling_refs(&self) -> &BTreeSet<String> {
        &self.dangling_refs
    }

    pub fn dangling_occurrences(&self) -> usize {
        self.dangling_occurrences
    }

    pub fn edge_count(&self) -> usize {
        self.cited_by.values().map(Vec::len).sum()
    }

    pub fn warnings(&self) -> &LoadWarnings {
        &self.warnings
    }

    pub fn citation_count(&self, paper: &str) -> Result<u64> {
        self.paper(paper)?;
        Ok(self.cited_by(paper).len() as u64)
    }

    /// Citations received by `paper` from papers published in `year`.
    pub fn citations_in_year(&self, paper: &str, year: i32) -> Result<u64> {
        self.paper(paper)?;
        Ok(self
            .cited_by(paper)
            .iter()
            .filter(|c| self.papers[*c].year == year)
            .count() as u64)
    }

    /// Papers listing `author`, most cited first; ties go to the older paper,
    /// then to the smaller id.
    pub fn author_papers(&self, author: &str) -> Result<Vec<(&PaperRecord, u64)>> {
        if !self.has_author(author) {
            return Err(CorpusError::UnknownAuthor(author.to_string()));
        }
        let mut out: Vec<(&PaperRecord, u64)> = self
            .by_author
            .get(author)
            .into_iter()
            .flatten()
            .map(|id| (&self.papers[id], self.cited_by(id).len() as u64))
            .collect();
        sort_ranked(&mut out);
        Ok(out)
    }
}

/// Orders ranked paper lists: citations descending, year ascending, id ascending.
pub fn sort_ranked(papers: &mut [(&PaperRecord, u64)]) {
    papers.sort_by(|(a, ca), (b, cb)| cb.cmp(ca).then(a.year.cmp(&b.year)).then_with(|| a.id.cmp(&b.id)));
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub fn paper(id: &str, year: i32, authors: &[&str], refs: &[&str]) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            title: format!("Paper {id}"),
            author_ids: authors.iter().map(|s| s.to_string()).collect(),
            journal_id: None,
            field_id: None,
            year,
            tags: BTreeSet::new(),
            references: refs.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn corpus(papers: Vec<PaperRecord>) -> Corpus {
        Corpus::from_records(
            CorpusRecords {
                papers,
                ..Default::default()
            },
            false,
        )
        .unwrap()
    }
}
