//! `key = value` configuration file. Values here lose to environment
//! variables and flags, which clap resolves before we look at the file.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "corpus",
    "format",
    "strict",
    "now_year",
    "seed",
    "gamma",
    "delta",
    "hm_floor",
    "jif_window",
    "eigenfactor_window",
    "damping",
    "tol",
    "max_iter",
    "y_a",
    "y_b",
    "y_c",
    "scale_min",
    "scale_max",
    "dimensions",
    "monthly_budget",
    "saturation_count",
    "reputation_damping",
    "reputation_tol",
    "reputation_max_iter",
    "min_overlap",
    "z_threshold",
    "round_size",
    "review_threshold",
    "allow_repeat_rounds",
    "temperature",
    "k",
];

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    source: String,
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&path.display().to_string(), &text)
    }

    pub fn parse(source: &str, text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| CliError::Usage(format!("{source}:{}: {reason}", i + 1));
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let key = key.trim();
            let known = KNOWN_KEYS.contains(&key) || key.strip_prefix("venue.").is_some_and(|r| r.contains('.'));
            if !known {
                return Err(bad(&format!("unknown key `{key}`")));
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(bad(&format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            source: source.to_string(),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Usage(format!("{}: bad value for `{key}`: {e}", self.source)))
            })
            .transpose()
    }

    /// Flag (or environment) value if given, else the file's, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    /// `venue.<name>.<dimension> = weight` entries.
    pub fn venue_weights(&self) -> Result<BTreeMap<String, BTreeMap<String, f64>>, CliError> {
        let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (key, value) in &self.values {
            let Some((venue, dim)) = key.strip_prefix("venue.").and_then(|r| r.split_once('.')) else {
                continue;
            };
            let w: f64 = value
                .parse()
                .map_err(|e| CliError::Usage(format!("{}: bad value for `{key}`: {e}", self.source)))?;
            out.entry(venue.to_string()).or_default().insert(dim.to_string(), w);
        }
        Ok(out)
    }
}
