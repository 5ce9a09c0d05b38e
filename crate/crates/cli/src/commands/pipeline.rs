//! `run`: extract, augment, score with every system, fuse, and report EER.

use std::fs;
use std::path::{Path, PathBuf};

use antispoof::eval::{compute_eer, Eer, EnsembleWeights};
use serde::{Deserialize, Serialize};

use super::augment::{augment, AugmentConfig};
use super::extract::extract;
use super::forward::{load_model_spec, score_features};
use super::fuse::fuse;
use crate::feature::FeatureSettings;
use crate::failure::{CliResult, Context, Failure};
use crate::fsutil::{atomic_write, ensure_dir, pretty_json, read_labels};

pub const PIPELINE_SCHEMA_VERSION: u32 = 1;

/// One scored system: model spec, weights and fusion weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub name: String,
    pub model: PathBuf,
    pub weights: PathBuf,
    pub fusion_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IoConfig {
    /// WAV file or directory.
    pub input: PathBuf,
    #[serde(default)]
    pub labels: Option<PathBuf>,
    pub output: PathBuf,
}

/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub feature: FeatureSettings,
    #[serde(default)]
    pub augment: AugmentConfig,
    pub seed: u64,
    #[serde(default)]
    pub strict_paper: bool,
    pub systems: Vec<SystemConfig>,
    pub io: IoConfig,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).context(path.display())?;
        let mut cfg: Self = serde_json::from_str(&text).context(path.display())?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate().context(path.display())?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.io.input);
        fix(&mut self.io.output);
        if let Some(l) = &mut self.io.labels {
            fix(l);
        }
        for s in &mut self.systems {
            fix(&mut s.model);
            fix(&mut s.weights);
        }
    }

    pub fn validate(&self) -> CliResult {
        if self.schema_version != PIPELINE_SCHEMA_VERSION {
            return Err(Failure::input(format!(
                "pipeline schema_version {} is not supported",
                self.schema_version
            )));
        }
        self.augment.validate()?;
        if self.systems.is_empty() {
            return Err(Failure::input("pipeline lists no systems"));
        }
        let mut paths = vec![&self.io.input];
        paths.extend(&self.io.labels);
        for s in &self.systems {
            paths.push(&s.model);
            paths.push(&s.weights);
        }
        for p in paths {
            if !p.exists() {
                return Err(Failure::input(format!("{} does not exist", p.display())));
            }
        }
        self.fusion_weights()?;
        Ok(())
    }

    pub fn fusion_weights(&self) -> CliResult<EnsembleWeights> {
        Ok(EnsembleWeights::from_pairs(
            self.systems.iter().map(|s| (s.name.clone(), s.fusion_weight)),
        )?)
    }
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub clips: usize,
    pub systems: Vec<String>,
    pub eer: Option<Eer>,
}

/// Output layout: `features/`, `augmented/`, `scores/<system>.tsv`,
/// `fusion_weights.json`, `fused.tsv` and `summary.json`.
pub fn run(cfg: &PipelineConfig) -> CliResult<PipelineSummary> {
    let out = &cfg.io.output;
    ensure_dir(out)?;
    let labels = cfg.io.labels.as_deref().map(read_labels).transpose()?;

    let features = out.join("features");
    let clips = extract(&cfg.io.input, &cfg.feature, &features)?;
    log::info!("extracted {clips} clips");
    let augmented = out.join("augmented");
    augment(&features, &cfg.augment, cfg.seed, labels.as_ref(), &augmented)?;

    let scores_dir = out.join("scores");
    ensure_dir(&scores_dir)?;
    let mut score_files = Vec::new();
    for s in &cfg.systems {
        let spec = load_model_spec(&s.model, cfg.strict_paper)?;
        let path = scores_dir.join(format!("{}.tsv", s.name));
        score_features(&augmented, &spec, &s.weights, labels.as_ref(), &path)
            .context(&s.name)?;
        score_files.push(path);
    }

    let weights_path = out.join("fusion_weights.json");
    atomic_write(&weights_path, &pretty_json(&cfg.fusion_weights()?))?;
    let fused = fuse(&score_files, &weights_path, &out.join("fused.tsv"))?;
    let eer = match labels {
        Some(_) => Some(compute_eer(&fused)?),
        None => None,
    };
    let summary = PipelineSummary {
        clips,
        systems: cfg.systems.iter().map(|s| s.name.clone()).collect(),
        eer,
    };
    atomic_write(&out.join("summary.json"), &pretty_json(&summary))?;
    Ok(summary)
}
