use std::path::Path;

use antispoof::models::{build_model, init_weights, ModelKind, ModelSpec};

use crate::failure::{CliResult, Context};
use crate::fsutil::atomic_write;

pub fn write_preset(kind: ModelKind, out: &Path) -> CliResult {
    let mut json = ModelSpec::preset(kind).to_json();
    json.push('\n');
    atomic_write(out, json.as_bytes())
}

/// Initializes weights for `spec` and writes them to `out`.
pub fn write_init_weights(spec: &ModelSpec, seed: u64, out: &Path) -> CliResult<usize> {
    let model = build_model(spec).context("model spec")?;
    let weights = init_weights(&model, seed)?;
    atomic_write(out, &weights.to_bytes())?;
    Ok(model.parameter_count())
}
