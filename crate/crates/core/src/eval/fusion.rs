//! Weighted-mean score fusion.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScoreEntry, ScoreSet};
use crate::error::{Error, Result};

/// Tolerance on the sum of ensemble weights.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemWeight {
    pub system: String,
    pub weight: f64,
}

/// Per-system fusion weights: non-negative and summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct EnsembleWeights {
    weights: Vec<SystemWeight>,
}

#[derive(Serialize, Deserialize)]
struct RawWeights {
    weights: Vec<SystemWeight>,
}

impl TryFrom<RawWeights> for EnsembleWeights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        Self::new(raw.weights)
    }
}

impl From<EnsembleWeights> for RawWeights {
    fn from(w: EnsembleWeights) -> Self {
        Self { weights: w.weights }
    }
}

/// Systems and weights of the submitted five-model ensemble.
pub const PUBLISHED_WEIGHTS: [(&str, f64); 5] = [
    ("lcnn", 0.20),
    ("resmax", 0.27),
    ("ddws", 0.20),
    ("bc_resmax", 0.13),
    ("ofd", 0.20),
];

impl EnsembleWeights {
    pub fn new(weights: Vec<SystemWeight>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("ensemble needs at least one system"));
        }
        let mut seen = HashSet::new();
        for w in &weights {
            if !seen.insert(w.system.as_str()) {
                return Err(Error::config(format!("system {} listed twice", w.system)));
            }
            if !(w.weight.is_finite() && w.weight >= 0.0) {
                return Err(Error::config(format!(
                    "weight {} of {} must be finite and non-negative",
                    w.weight, w.system
                )));
            }
        }
        let sum: f64 = weights.iter().map(|w| w.weight).sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::config(format!("ensemble weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn from_pairs<S: Into<String>>(pairs: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(s, w)| SystemWeight {
                    system: s.into(),
                    weight: w,
                })
                .collect(),
        )
    }

    pub fn published() -> Self {
        Self::from_pairs(PUBLISHED_WEIGHTS).expect("published weights are valid")
    }

    /// Weight 1 on `system`, 0 on the rest.
    pub fn one_hot(systems: &[&str], system: &str) -> Result<Self> {
        Self::from_pairs(
            systems
                .iter()
                .map(|&s| (s, if s == system { 1.0 } else { 0.0 })),
        )
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[SystemWeight] {
        &self.weights
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().map(|w| w.weight).sum()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Fuses one score set per system (in weight order) into
/// `sum(w_i * s_i) / sum(w_i)` per utterance, clamped to the range of the
/// inputs so the result is always a convex combination.
///
/// Every set must cover the same ids; the output follows the first set's
/// order and takes each label from the first set that has one.
pub fn fuse_scores(sets: &[ScoreSet], weights: &EnsembleWeights) -> Result<ScoreSet> {
    if sets.len() != weights.len() {
        return Err(Error::config(format!(
            "{} score sets for {} weighted systems",
            sets.len(),
            weights.len()
        )));
    }
    let mut missing = Vec::new();
    for (set, w) in sets.iter().zip(weights.weights()) {
        for other in sets {
            for id in other.ids() {
                if !set.contains(id) {
                    missing.push(format!("{}:{id}", w.system));
                }
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(Error::Alignment { missing });
    }

    let total = weights.sum();
    let mut entries = Vec::with_capacity(sets[0].len());
    for id in sets[0].ids() {
        let mut acc = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut label = None;
        for (set, w) in sets.iter().zip(weights.weights()) {
            let e = set.get(id).expect("alignment checked");
            acc += w.weight * e.score;
            lo = lo.min(e.score);
            hi = hi.max(e.score);
            match (label, e.label) {
                (None, l) => label = l,
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::Validation {
                        location: format!("{}:{id}", w.system),
                        reason: format!("label {b} disagrees with {a}"),
                    });
                }
                _ => {}
            }
        }
        entries.push(ScoreEntry::new(id, (acc / total).clamp(lo, hi), label));
    }
    ScoreSet::new(entries)
}
