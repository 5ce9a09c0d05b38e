use std::path::{Path, PathBuf};

use antispoof::eval::{compute_eer, fuse_scores, Eer, EnsembleWeights, ScoreSet};

use crate::failure::{CliResult, Context};
use crate::fsutil::atomic_write;

pub fn fuse(score_files: &[PathBuf], weights: &Path, out: &Path) -> CliResult<ScoreSet> {
    let weights = EnsembleWeights::load(weights).context(weights.display())?;
    let sets = score_files
        .iter()
        .map(|p| ScoreSet::load(p).context(p.display()))
        .collect::<CliResult<Vec<_>>>()?;
    let fused = fuse_scores(&sets, &weights)?;
    atomic_write(out, fused.to_tsv().as_bytes())?;
    Ok(fused)
}

pub fn eer(scores: &Path) -> CliResult<Eer> {
    let set = ScoreSet::load(scores).context(scores.display())?;
    Ok(compute_eer(&set).context(scores.display())?)
}

pub fn eer_line(e: &Eer) -> String {
    format!("EER {} (threshold {})", e.percent_string(), e.threshold)
}
