use std::path::Path;

use antispoof::features::load_wav;
use antispoof::npy::spectrogram_to_bytes;
use serde::Serialize;

use crate::feature::{Extractor, FeatureSettings, ResolvedFeature};
use crate::failure::{CliResult, Failure};
use crate::fsutil::{atomic_write, ensure_dir, inputs, pretty_json, utterance_id};

pub const SIDECAR_SCHEMA_VERSION: u32 = 1;

/// Written next to every feature file.
#[derive(Serialize)]
struct Sidecar<'a> {
    schema_version: u32,
    source: String,
    sample_rate: u32,
    feature: String,
    config: &'a ResolvedFeature,
    shape: [usize; 2],
}

/// Extracts one `<id>.npy` (plus `<id>.json`) per WAV. Failures are logged
/// and counted; any failure makes the command fail after the others ran.
pub fn extract(input: &Path, settings: &FeatureSettings, out: &Path) -> CliResult<usize> {
    let files = inputs(input, "wav")?;
    ensure_dir(out)?;
    let mut extractor = Extractor::new(settings);
    let mut failed = 0;
    for path in &files {
        let id = utterance_id(path);
        let result = (|| -> CliResult {
            let clip = load_wav(path)?;
            let spec = extractor.extract(&clip)?;
            atomic_write(&out.join(format!("{id}.npy")), &spectrogram_to_bytes(&spec)?)?;
            let sidecar = Sidecar {
                schema_version: SIDECAR_SCHEMA_VERSION,
                source: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sample_rate: clip.sample_rate(),
                feature: settings.kind.to_string(),
                config: extractor.config(),
                shape: spec.shape(),
            };
            atomic_write(&out.join(format!("{id}.json")), &pretty_json(&sidecar))
        })();
        match result {
            Ok(()) => log::debug!("extracted {}", path.display()),
            Err(e) => {
                log::error!("{}: {e}", path.display());
                failed += 1;
            }
        }
    }
    if failed > 0 {
        return Err(Failure::input(format!("{failed} of {} files failed", files.len())));
    }
    Ok(files.len())
}
