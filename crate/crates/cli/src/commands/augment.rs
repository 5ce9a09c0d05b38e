use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use antispoof::augment::{apply_ffm, mixup, sample_lambda, FfmConfig, Label, MaskReport, MixupParams};
use antispoof::eval::Class;
use antispoof::npy::{spectrogram_from_bytes, spectrogram_to_bytes};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Context, Failure};
use crate::fsutil::{atomic_write, ensure_dir, file_seed, inputs, utterance_id};

pub const AUGMENT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "masks.jsonl";

/// Augmentation settings. Mixup is off unless `mixup_alpha` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    #[serde(default)]
    pub ffm: FfmConfig,
    #[serde(default)]
    pub mixup_alpha: Option<f64>,
}

fn schema_version() -> u32 {
    AUGMENT_SCHEMA_VERSION
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            schema_version: AUGMENT_SCHEMA_VERSION,
            ffm: FfmConfig::default(),
            mixup_alpha: None,
        }
    }
}

impl AugmentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).context(path.display())?;
        let cfg: Self = serde_json::from_str(&text).context(path.display())?;
        cfg.validate().context(path.display())?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult {
        if self.schema_version != AUGMENT_SCHEMA_VERSION {
            return Err(Failure::input(format!(
                "augment schema_version {} is not supported",
                self.schema_version
            )));
        }
        self.ffm.validate()?;
        self.mixup_params()?;
        Ok(())
    }

    fn mixup_params(&self) -> CliResult<Option<MixupParams>> {
        Ok(self.mixup_alpha.map(MixupParams::new).transpose()?)
    }
}

#[derive(Serialize)]
struct MixupRecord {
    partner: String,
    lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<f64>,
}

/// One line of the JSONL report.
#[derive(Serialize)]
struct ReportLine {
    id: String,
    #[serde(flatten)]
    masks: MaskReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    mixup: Option<MixupRecord>,
}

fn label_value(labels: Option<&BTreeMap<String, Class>>, id: &str) -> Option<Label> {
    labels.and_then(|m| m.get(id)).map(|c| match c {
        Class::Bonafide => Label::BONAFIDE,
        Class::Fake => Label::FAKE,
    })
}

/// Augments every `.npy` in `input` into `out`, plus a `masks.jsonl` report.
///
/// Each file draws from its own ChaCha8 stream seeded with
/// `seed ^ fnv1a64(id)`: first the mixup partner and lambda (when enabled),
/// then the FFM gates and masks. Files left untouched are copied verbatim.
pub fn augment(
    input: &Path,
    config: &AugmentConfig,
    seed: u64,
    labels: Option<&BTreeMap<String, Class>>,
    out: &Path,
) -> CliResult<usize> {
    config.validate()?;
    let mix = config.mixup_params()?;
    let files = inputs(input, "npy")?;
    ensure_dir(out)?;
    let raw: Vec<Vec<u8>> = files
        .iter()
        .map(|p| fs::read(p).context(p.display()))
        .collect::<CliResult<_>>()?;
    let specs = raw
        .iter()
        .zip(&files)
        .map(|(b, p)| spectrogram_from_bytes(b).context(p.display()))
        .collect::<CliResult<Vec<_>>>()?;
    let ids: Vec<String> = files.iter().map(|p| utterance_id(p)).collect();

    let mut report = String::new();
    for (i, id) in ids.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(file_seed(seed, id));
        let (base, mixup_record) = match &mix {
            Some(params) => {
                let j = if ids.len() == 1 {
                    i
                } else {
                    let k = rng.random_range(0..ids.len() - 1);
                    if k >= i {
                        k + 1
                    } else {
                        k
                    }
                };
                let lambda = sample_lambda(params, &mut rng);
                let (y_i, y_j) = (label_value(labels, id), label_value(labels, &ids[j]));
                let (mixed, y) = mixup(
                    &specs[i],
                    &specs[j],
                    y_i.unwrap_or(Label::FAKE),
                    y_j.unwrap_or(Label::FAKE),
                    lambda,
                )
                .context(format!("{id} with {}", ids[j]))?;
                let record = MixupRecord {
                    partner: ids[j].clone(),
                    lambda,
                    label: y_i.and(y_j).map(|_| y.value()),
                };
                (mixed, Some(record))
            }
            None => (specs[i].clone(), None),
        };
        let (augmented, masks) = apply_ffm(&base, &config.ffm, &mut rng).context(id)?;
        let target = out.join(format!("{id}.npy"));
        if mixup_record.is_none() && masks.is_empty() {
            atomic_write(&target, &raw[i])?;
        } else {
            atomic_write(&target, &spectrogram_to_bytes(&augmented)?)?;
        }
        let line = ReportLine {
            id: id.clone(),
            masks,
            mixup: mixup_record,
        };
        report.push_str(&serde_json::to_string(&line)?);
        report.push('\n');
    }
    atomic_write(&out.join(REPORT_FILE), report.as_bytes())?;
    Ok(ids.len())
}
