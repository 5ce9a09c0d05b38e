//! Score files: UTF-8 TSV with `utterance_id<TAB>score[<TAB>label]`, label
//! being `bonafide` or `fake`. Higher scores mean more bonafide.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Class {
    Bonafide,
    Fake,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Bonafide => "bonafide",
            Self::Fake => "fake",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bonafide" => Ok(Self::Bonafide),
            "fake" => Ok(Self::Fake),
            other => Err(Error::Format(format!(
                "label {other:?} is neither bonafide nor fake"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub id: String,
    pub score: f64,
    pub label: Option<Class>,
}

impl ScoreEntry {
    pub fn new(id: impl Into<String>, score: f64, label: Option<Class>) -> Self {
        Self {
            id: id.into(),
            score,
            label,
        }
    }
}

/// Scores keyed by utterance id, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    entries: Vec<ScoreEntry>,
    index: HashMap<String, usize>,
}

impl ScoreSet {
    pub fn new(entries: Vec<ScoreEntry>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            if e.id.is_empty() || e.id.contains(['\t', '\n', '\r']) {
                return Err(Error::Format(format!("invalid utterance id {:?}", e.id)));
            }
            if !e.score.is_finite() {
                return Err(Error::Format(format!("{}: score {} is not finite", e.id, e.score)));
            }
            if index.insert(e.id.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate utterance id {}", e.id)));
            }
        }
        Ok(Self { entries, index })
    }

    /// Builds a labeled set from separate bonafide and fake score lists.
    pub fn from_classes(bonafide: &[f64], fake: &[f64]) -> Result<Self> {
        let entries = bonafide
            .iter()
            .map(|&s| (s, Class::Bonafide))
            .chain(fake.iter().map(|&s| (s, Class::Fake)))
            .enumerate()
            .map(|(i, (s, c))| ScoreEntry::new(format!("u{i:05}"), s, Some(c)))
            .collect();
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&ScoreEntry> {
        self.index.get(id).map(|&i| &self.entries[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.id.as_str())
    }

    /// Scores split by class; every entry must carry a label.
    pub fn by_class(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut bona = Vec::new();
        let mut fake = Vec::new();
        for e in &self.entries {
            match e.label {
                Some(Class::Bonafide) => bona.push(e.score),
                Some(Class::Fake) => fake.push(e.score),
                None => {
                    return Err(Error::MetricUndefined(format!("{} has no label", e.id)));
                }
            }
        }
        Ok((bona, fake))
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let bad = |msg: String| Error::Format(format!("line {}: {msg}", n + 1));
            let cols: Vec<&str> = line.split('\t').collect();
            if !(2..=3).contains(&cols.len()) {
                return Err(bad(format!("expected 2 or 3 columns, got {}", cols.len())));
            }
            let score: f64 = cols[1]
                .trim()
                .parse()
                .map_err(|_| bad(format!("score {:?} is not a number", cols[1])))?;
            let label = match cols.get(2) {
                Some(l) => Some(l.trim().parse::<Class>().map_err(|e| bad(e.to_string()))?),
                None => None,
            };
            entries.push(ScoreEntry::new(cols[0], score, label));
        }
        Self::new(entries)
    }

    /// Scores are written in shortest round-trip form.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.id);
            out.push('\t');
            out.push_str(&format_score(e.score));
            if let Some(l) = e.label {
                out.push('\t');
                out.push_str(l.as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_tsv(&std::fs::read_to_string(path)?)
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-5, 1e16)`.
fn format_score(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}
