use serde::{Deserialize, Serialize};

use super::stft::stft_power_f64;
use super::{log_compress, AudioClip, Spectrogram};
use crate::error::{Error, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Mel-spectrogram settings. `fmax = None` means Nyquist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub n_mels: usize,
    pub window_len: usize,
    pub hop: usize,
    #[serde(default)]
    pub fmin: f64,
    #[serde(default)]
    pub fmax: Option<f64>,
}

impl MelConfig {
    /// 100 bands, 1024-sample window, 512-sample hop.
    pub const fn mel1() -> Self {
        Self {
            n_mels: 100,
            window_len: 1024,
            hop: 512,
            fmin: 0.0,
            fmax: None,
        }
    }

    /// 120 bands, 2048-sample window, 1024-sample hop.
    pub const fn mel2() -> Self {
        Self {
            n_mels: 120,
            window_len: 2048,
            hop: 1024,
            fmin: 0.0,
            fmax: None,
        }
    }

    pub fn fmax_for(&self, sample_rate: u32) -> f64 {
        self.fmax.unwrap_or(sample_rate as f64 / 2.0)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        let fmax = self.fmax_for(sample_rate);
        if self.n_mels == 0 {
            return Err(Error::config("n_mels must be at least 1"));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(Error::config(format!(
                "hop {} must be in 1..={}",
                self.hop, self.window_len
            )));
        }
        if !(self.fmin >= 0.0 && self.fmin < fmax && fmax <= nyquist) {
            return Err(Error::config(format!(
                "need 0 <= fmin < fmax <= {nyquist}, got fmin={} fmax={fmax}",
                self.fmin
            )));
        }
        Ok(())
    }
}

/// Triangular mel filters, `[n_mels, n_fft/2 + 1]`, row-major.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    weights: Vec<f64>,
    n_mels: usize,
    n_bins: usize,
    centers_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m * self.n_bins..(m + 1) * self.n_bins]
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.centers_hz
    }

    /// Filter whose center frequency is closest to `hz`.
    pub fn nearest_band(&self, hz: f64) -> usize {
        (0..self.n_mels)
            .min_by(|&a, &b| {
                (self.centers_hz[a] - hz)
                    .abs()
                    .total_cmp(&(self.centers_hz[b] - hz).abs())
            })
            .unwrap_or(0)
    }

    /// Projects a `[n_bins, n_frames]` power matrix onto the filters.
    fn apply(&self, power: &[f64], n_frames: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_mels * n_frames];
        for m in 0..self.n_mels {
            let dst = &mut out[m * n_frames..(m + 1) * n_frames];
            for (k, &w) in self.row(m).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = &power[k * n_frames..(k + 1) * n_frames];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }
}

/// Builds area-normalized triangular filters with centers equally spaced
/// in mel between `fmin` and `fmax`.
pub fn mel_filterbank(
    sample_rate: u32,
    n_fft: usize,
    n_mels: usize,
    fmin: f64,
    fmax: f64,
) -> Result<MelFilterbank> {
    let nyquist = sample_rate as f64 / 2.0;
    if !(fmin >= 0.0 && fmin < fmax && fmax <= nyquist) {
        return Err(Error::config(format!(
            "need 0 <= fmin < fmax <= {nyquist}, got fmin={fmin} fmax={fmax}"
        )));
    }
    if n_mels == 0 || n_fft < 2 {
        return Err(Error::config("n_mels and n_fft must be positive"));
    }
    let n_bins = n_fft / 2 + 1;
    let bin_hz: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * sample_rate as f64 / n_fft as f64)
        .collect();

    let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();

    let mut weights = vec![0.0; n_mels * n_bins];
    for m in 0..n_mels {
        let (lo, c, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let norm = 2.0 / (hi - lo);
        let row = &mut weights[m * n_bins..(m + 1) * n_bins];
        for (w, &f) in row.iter_mut().zip(&bin_hz) {
            let rise = (f - lo) / (c - lo);
            let fall = (hi - f) / (hi - c);
            *w = rise.min(fall).max(0.0) * norm;
        }
        if row.iter().all(|&w| w == 0.0) {
            return Err(Error::DegenerateFilter(format!(
                "mel filter {m} ({lo:.1}-{hi:.1} Hz) covers no FFT bin at n_fft={n_fft}; \
                 use fewer mel bands or a longer window"
            )));
        }
    }
    Ok(MelFilterbank {
        weights,
        n_mels,
        n_bins,
        centers_hz: edges[1..=n_mels].to_vec(),
    })
}

/// `log10(mel power + 1e-10)`, shape `[n_mels, 1 + len/hop]`.
pub fn melspectrogram(clip: &AudioClip, config: &MelConfig) -> Result<Spectrogram> {
    config.validate(clip.sample_rate())?;
    let bank = mel_filterbank(
        clip.sample_rate(),
        config.window_len,
        config.n_mels,
        config.fmin,
        config.fmax_for(clip.sample_rate()),
    )?;
    melspectrogram_with(clip, config, &bank)
}

pub(crate) fn melspectrogram_with(
    clip: &AudioClip,
    config: &MelConfig,
    bank: &MelFilterbank,
) -> Result<Spectrogram> {
    let (power, n_bins, n_frames) = stft_power_f64(clip.samples(), config.window_len, config.hop)?;
    if n_bins != bank.n_bins {
        return Err(Error::dim(format!(
            "filterbank expects {} bins, STFT produced {n_bins}",
            bank.n_bins
        )));
    }
    let mel = bank.apply(&power, n_frames);
    Spectrogram::new(mel.into_iter().map(log_compress).collect(), bank.n_mels, n_frames)
}
