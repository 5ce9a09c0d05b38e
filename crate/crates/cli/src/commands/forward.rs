use std::collections::BTreeMap;
use std::path::Path;

use antispoof::eval::{Class, ScoreEntry, ScoreSet};
use antispoof::models::{bonafide_scores, build_model, forward, load_weights, ModelSpec};
use antispoof::nn::Tensor4;
use antispoof::npy::load_spectrogram;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::failure::{CliResult, Context};
use crate::fsutil::{atomic_write, inputs, utterance_id};

pub fn load_model_spec(path: &Path, strict_paper: bool) -> CliResult<ModelSpec> {
    let mut spec = ModelSpec::load(path).context(path.display())?;
    spec.strict_paper |= strict_paper;
    Ok(spec)
}

/// Scores every `.npy` in `features` with `softmax(logits)[bonafide]` and
/// writes a TSV sorted by utterance id.
pub fn score_features(
    features: &Path,
    spec: &ModelSpec,
    weights_path: &Path,
    labels: Option<&BTreeMap<String, Class>>,
    out: &Path,
) -> CliResult<ScoreSet> {
    let model = build_model(spec).context("model spec")?;
    let weights = load_weights(weights_path).context(weights_path.display())?;
    model.check_weights(&weights).context(weights_path.display())?;
    let files = inputs(features, "npy")?;
    // Inference never draws from it; dropout is off.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut entries = Vec::with_capacity(files.len());
    for path in &files {
        let id = utterance_id(path);
        let spec = load_spectrogram(path).context(path.display())?;
        let [f, t] = spec.shape();
        let x = Tensor4::new(spec.into_data(), [1, 1, f, t])?;
        let logits = forward(&model, &weights, &x, false, &mut rng).context(path.display())?;
        let score = bonafide_scores(&logits)?[0];
        let label = labels.and_then(|m| m.get(&id)).copied();
        if labels.is_some() && label.is_none() {
            log::warn!("{id} has no label");
        }
        entries.push(ScoreEntry::new(id, score, label));
    }
    let set = ScoreSet::new(entries)?;
    atomic_write(out, set.to_tsv().as_bytes())?;
    Ok(set)
}
