//! Spectrogram features: STFT power, mel-spectrograms and the constant-Q
//! transform, all log-compressed with [`log_compress`].

mod audio;
mod cqt;
mod mel;
mod stft;

pub use audio::{load_wav, read_wav, save_wav, write_wav, AudioClip, DEFAULT_SAMPLE_RATE};
pub use cqt::{cqt, CqtConfig, CqtKernelBank};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, melspectrogram, MelConfig, MelFilterbank};
pub use stft::{frame_count, hann_window, stft_power};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Additive floor inside the log. Silence maps to `log10(LOG_EPS) = -10`.
pub const LOG_EPS: f64 = 1e-10;

pub fn log_compress(v: f64) -> f32 {
    (v + LOG_EPS).log10() as f32
}

/// Row-major `[n_freq, n_frames]` feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    data: Vec<f32>,
    n_freq: usize,
    n_frames: usize,
}

impl Spectrogram {
    pub fn new(data: Vec<f32>, n_freq: usize, n_frames: usize) -> Result<Self> {
        if n_freq == 0 || n_frames == 0 {
            return Err(Error::dim(format!(
                "spectrogram dimensions must be positive, got [{n_freq}, {n_frames}]"
            )));
        }
        if data.len() != n_freq * n_frames {
            return Err(Error::dim(format!(
                "data length {} does not match [{n_freq}, {n_frames}]",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("non-finite spectrogram entry at {i}")));
        }
        Ok(Self {
            data,
            n_freq,
            n_frames,
        })
    }

    pub fn filled(n_freq: usize, n_frames: usize, value: f32) -> Result<Self> {
        Self::new(vec![value; n_freq * n_frames], n_freq, n_frames)
    }

    pub fn n_freq(&self) -> usize {
        self.n_freq
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.n_freq, self.n_frames]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, f: usize, t: usize) -> f32 {
        self.data[f * self.n_frames + t]
    }

    pub fn row(&self, f: usize) -> &[f32] {
        &self.data[f * self.n_frames..(f + 1) * self.n_frames]
    }

    /// Zeroes rows `start..end` in place.
    pub(crate) fn zero_rows(&mut self, start: usize, end: usize) {
        let end = end.min(self.n_freq);
        if start < end {
            self.data[start * self.n_frames..end * self.n_frames].fill(0.0);
        }
    }

    /// Index of the frequency row with the largest value in frame `t`.
    pub fn argmax_freq(&self, t: usize) -> usize {
        (0..self.n_freq)
            .max_by(|&a, &b| self.get(a, t).total_cmp(&self.get(b, t)))
            .unwrap_or(0)
    }

    /// Frequency row with the largest mean across frames.
    pub fn argmax_mean_freq(&self) -> usize {
        let means: Vec<f64> = (0..self.n_freq)
            .map(|f| self.row(f).iter().map(|&v| v as f64).sum::<f64>())
            .collect();
        (0..self.n_freq)
            .max_by(|&a, &b| means[a].total_cmp(&means[b]))
            .unwrap_or(0)
    }
}
