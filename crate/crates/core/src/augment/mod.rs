//! Spectrogram augmentation: mixup and frequency feature masking (FFM).
//!
//! Every transform takes its RNG explicitly, so a fixed seed reproduces the
//! exact same output and mask report.

mod ffm;
mod mixup;

pub use ffm::{
    apply_ffm, mask_high_freq, mask_low_freq, mask_random_bands, zero_rows, FfmConfig,
    MaskReport, RowRange,
};
pub use mixup::{mixup, sample_lambda, Label, MixupParams};
