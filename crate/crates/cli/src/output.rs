//! Rendering of command results as JSON or CSV.

use std::collections::BTreeSet;

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// A command result. `rows`, when present, is what CSV output tabulates;
/// otherwise CSV gets one `key,value` row per leaf of `doc`.
pub struct Report {
    pub doc: Value,
    pub rows: Option<Vec<Value>>,
}

impl Report {
    pub fn doc(doc: Value) -> Self {
        Self { doc, rows: None }
    }

    pub fn table(doc: Value, rows: Vec<Value>) -> Self {
        Self { doc, rows: Some(rows) }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                // serde_json's map is ordered, so keys come out sorted
                let mut s = serde_json::to_string_pretty(&self.doc).expect("a Value always serializes");
                s.push('\n');
                s
            }
            Format::Csv => match &self.rows {
                Some(rows) => table_csv(rows),
                None => leaves_csv(&self.doc),
            },
        }
    }
}

/// Dotted-path leaves of `v`. Arrays stay whole unless `arrays` is set.
fn flatten(prefix: &str, v: &Value, arrays: bool, out: &mut Map<String, Value>) {
    match v {
        Value::Object(m) if !m.is_empty() => {
            for (k, v) in m {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, arrays, out);
            }
        }
        Value::Array(a) if arrays && !a.is_empty() => {
            for (i, v) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), v, arrays, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.clone());
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(_) | Value::Object(_) => v.to_string(),
        other => other.to_string(),
    }
}

fn write_rows(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flushing to memory")).expect("csv of utf-8 input")
}

fn table_csv(rows: &[Value]) -> String {
    let flat: Vec<Map<String, Value>> = rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            flatten("", r, false, &mut m);
            m
        })
        .collect();
    let header: Vec<String> = flat
        .iter()
        .flat_map(|m| m.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let body = flat
        .iter()
        .map(|m| header.iter().map(|h| m.get(h).map(cell).unwrap_or_default()).collect());
    write_rows(&header, body)
}

fn leaves_csv(doc: &Value) -> String {
    let mut m = Map::new();
    flatten("", doc, true, &mut m);
    write_rows(
        &["key".to_string(), "value".to_string()],
        m.iter().map(|(k, v)| vec![k.clone(), cell(v)]),
    )
}
