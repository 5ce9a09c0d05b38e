use serde::{Deserialize, Serialize};

use super::Tensor4;
use crate::error::{Error, Result};

pub const DEFAULT_EPS: f32 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMode {
    /// Statistics of the current batch.
    Batch,
    /// Stored running statistics.
    Running,
}

/// Borrowed normalization parameters, one entry per normalized group.
#[derive(Debug, Clone, Copy)]
pub struct NormParams<'a> {
    pub gamma: &'a [f32],
    pub beta: &'a [f32],
    pub running_mean: &'a [f32],
    pub running_var: &'a [f32],
    pub eps: f32,
    pub mode: NormMode,
}

impl NormParams<'_> {
    fn check(&self, groups: usize) -> Result<()> {
        let lens = [
            self.gamma.len(),
            self.beta.len(),
            self.running_mean.len(),
            self.running_var.len(),
        ];
        if lens.iter().any(|&l| l != groups) {
            return Err(Error::dim(format!(
                "normalization expects {groups} parameters per tensor, got {lens:?}"
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("normalization epsilon must be positive"));
        }
        if self.running_var.iter().any(|&v| v < 0.0) {
            return Err(Error::config("running variance must be non-negative"));
        }
        Ok(())
    }
}

/// Normalizes each `(channel, band)` cell, bands being `band_rows`
/// consecutive frequency rows. Parameter index is `c * n_bands + band`.
fn normalize_bands(x: &Tensor4, band_rows: usize, p: &NormParams) -> Result<Tensor4> {
    let [n, c, f, t] = x.shape();
    let n_bands = f / band_rows;
    p.check(c * n_bands)?;
    let count = n * band_rows * t;
    if p.mode == NormMode::Batch && count <= 1 {
        return Err(Error::DegenerateBatch(format!(
            "batch statistics over {count} value(s) per group"
        )));
    }

    let mut out = x.clone();
    let src = x.data();
    let span = band_rows * t;
    for ch in 0..c {
        for band in 0..n_bands {
            let g = ch * n_bands + band;
            let cells = (0..n).map(|i| x.offset(i, ch, band * band_rows, 0));
            let (mean, var) = match p.mode {
                NormMode::Running => (p.running_mean[g] as f64, p.running_var[g] as f64),
                NormMode::Batch => {
                    let sum: f64 = cells
                        .clone()
                        .flat_map(|o| src[o..o + span].iter())
                        .map(|&v| v as f64)
                        .sum();
                    let mean = sum / count as f64;
                    let sq: f64 = cells
                        .clone()
                        .flat_map(|o| src[o..o + span].iter())
                        .map(|&v| (v as f64 - mean).powi(2))
                        .sum();
                    (mean, sq / count as f64)
                }
            };
            let scale = p.gamma[g] as f64 / (var + p.eps as f64).sqrt();
            let shift = p.beta[g] as f64;
            for o in cells {
                for v in &mut out.data_mut()[o..o + span] {
                    *v = ((*v as f64 - mean) * scale + shift) as f32;
                }
            }
        }
    }
    Ok(out)
}

/// Per-channel normalization over `(N, F, T)`.
pub fn batch_norm(x: &Tensor4, p: &NormParams) -> Result<Tensor4> {
    normalize_bands(x, x.freq(), p)
}

/// Batch normalization applied separately to `n_subbands` contiguous
/// frequency bands, with parameters of length `C * n_subbands`.
///
/// When `F` is not a multiple of `n_subbands` the tensor is zero-padded
/// along frequency, normalized and cropped back.
pub fn subspectral_norm(x: &Tensor4, n_subbands: usize, p: &NormParams) -> Result<Tensor4> {
    if n_subbands == 0 {
        return Err(Error::config("n_subbands must be at least 1"));
    }
    let f = x.freq();
    let padded_f = f.div_ceil(n_subbands) * n_subbands;
    if padded_f == f {
        return normalize_bands(x, f / n_subbands, p);
    }
    let y = normalize_bands(&x.pad_freq(padded_f)?, padded_f / n_subbands, p)?;
    y.slice_freq(0, f)
}
