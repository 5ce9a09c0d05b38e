//! Score files, equal error rate, and ensemble fusion.

mod ablation;
mod eer;
mod fusion;
mod scores;

pub use ablation::{
    compare_ablation, AblationKey, AblationRun, PublishedResult, PUBLISHED_ABLATION,
    PUBLISHED_ENSEMBLE_EER, PUBLISHED_FINAL_EER,
};
pub use eer::{compute_eer, eer_from_classes, format_percent, Eer};
pub use fusion::{fuse_scores, EnsembleWeights, SystemWeight, PUBLISHED_WEIGHTS, WEIGHT_SUM_TOLERANCE};
pub use scores::{Class, ScoreEntry, ScoreSet};
