//! Constant-Q transform by the direct kernel method.
//!
//! Each bin `k` owns a Hann-windowed complex exponential at
//! `f_k = fmin * 2^(k / bins_per_octave)` with length `ceil(Q * sr / f_k)`,
//! `Q = filter_scale / (2^(1/bins_per_octave) - 1)`. The kernels are moved to
//! the frequency domain once and stored sparsely; every frame is transformed
//! with one FFT and correlated against each sparse spectral kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::stft::frame_count;
use super::{log_compress, AudioClip, Spectrogram};
use crate::error::{Error, Result};

/// Spectral kernel coefficients below this fraction of the kernel's peak
/// magnitude are dropped.
const SPARSITY_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CqtConfig {
    pub fmin: f64,
    pub n_bins: usize,
    pub filter_scale: f64,
    pub bins_per_octave: usize,
    pub hop: usize,
}

impl Default for CqtConfig {
    /// fmin 5 Hz, 100 bins, filter scale 1, 12 bins per octave, hop 512.
    fn default() -> Self {
        Self {
            fmin: 5.0,
            n_bins: 100,
            filter_scale: 1.0,
            bins_per_octave: 12,
            hop: 512,
        }
    }
}

impl CqtConfig {
    pub fn q(&self) -> f64 {
        self.filter_scale / (2f64.powf(1.0 / self.bins_per_octave as f64) - 1.0)
    }

    pub fn center_hz(&self, bin: usize) -> f64 {
        self.fmin * 2f64.powf(bin as f64 / self.bins_per_octave as f64)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if !(self.fmin > 0.0) || self.n_bins == 0 || self.bins_per_octave == 0 {
            return Err(Error::config("fmin, n_bins and bins_per_octave must be positive"));
        }
        if !(self.filter_scale > 0.0) || self.hop == 0 {
            return Err(Error::config("filter_scale and hop must be positive"));
        }
        let top = self.center_hz(self.n_bins - 1);
        let nyquist = sample_rate as f64 / 2.0;
        if top >= nyquist {
            return Err(Error::config(format!(
                "top CQT bin at {top:.1} Hz is not below Nyquist ({nyquist} Hz)"
            )));
        }
        Ok(())
    }
}

struct SparseKernel {
    index: Vec<usize>,
    coeff: Vec<Complex<f64>>,
}

/// Precomputed spectral kernels for one `(sample_rate, config)` pair.
pub struct CqtKernelBank {
    config: CqtConfig,
    sample_rate: u32,
    fft_size: usize,
    lengths: Vec<usize>,
    kernels: Vec<SparseKernel>,
    fft: Arc<dyn Fft<f64>>,
}

impl CqtKernelBank {
    pub fn new(sample_rate: u32, config: CqtConfig) -> Result<Self> {
        config.validate(sample_rate)?;
        let q = config.q();
        let sr = sample_rate as f64;
        let lengths: Vec<usize> = (0..config.n_bins)
            .map(|k| ((q * sr / config.center_hz(k)).ceil() as usize).max(1))
            .collect();
        let fft_size = lengths.iter().copied().max().unwrap_or(1).next_power_of_two();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(fft_size);

        let mut kernels = Vec::with_capacity(config.n_bins);
        let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
        for (k, &len) in lengths.iter().enumerate() {
            buf.fill(Complex::new(0.0, 0.0));
            let f = config.center_hz(k);
            let offset = fft_size / 2 - len / 2;
            buf[offset..offset + len].copy_from_slice(&time_kernel(f, len, sr));
            fft.process(&mut buf);
            let peak = buf.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let scale = 1.0 / fft_size as f64;
            let (index, coeff) = buf
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm() >= SPARSITY_THRESHOLD * peak)
                .map(|(m, c)| (m, c.conj() * scale))
                .unzip();
            kernels.push(SparseKernel { index, coeff });
        }
        Ok(Self {
            config,
            sample_rate,
            fft_size,
            lengths,
            kernels,
            fft,
        })
    }

    pub fn config(&self) -> &CqtConfig {
        &self.config
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn kernel_len(&self, bin: usize) -> usize {
        self.lengths[bin]
    }

    /// Complex CQT coefficients, `[n_bins][n_frames]`.
    pub fn transform_complex(&self, samples: &[f32]) -> Vec<Vec<Complex<f64>>> {
        let n_frames = frame_count(samples.len(), self.config.hop);
        let half = self.fft_size as isize / 2;
        let mut out = vec![vec![Complex::new(0.0, 0.0); n_frames]; self.config.n_bins];
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_size];
        for t in 0..n_frames {
            let origin = (t * self.config.hop) as isize - half;
            for (j, slot) in buf.iter_mut().enumerate() {
                let i = origin + j as isize;
                let x = if i >= 0 && (i as usize) < samples.len() {
                    samples[i as usize] as f64
                } else {
                    0.0
                };
                *slot = Complex::new(x, 0.0);
            }
            self.fft.process(&mut buf);
            for (k, kernel) in self.kernels.iter().enumerate() {
                out[k][t] = kernel
                    .index
                    .iter()
                    .zip(&kernel.coeff)
                    .map(|(&m, &c)| buf[m] * c)
                    .sum();
            }
        }
        out
    }

    /// `log10(|CQT| + 1e-10)`, shape `[n_bins, 1 + len/hop]`.
    pub fn transform(&self, clip: &AudioClip) -> Result<Spectrogram> {
        if clip.sample_rate() != self.sample_rate {
            return Err(Error::config(format!(
                "kernel bank built for {} Hz, clip is {} Hz",
                self.sample_rate,
                clip.sample_rate()
            )));
        }
        if clip.is_empty() {
            return Err(Error::InputTooShort("empty clip".into()));
        }
        let coeffs = self.transform_complex(clip.samples());
        let n_frames = coeffs[0].len();
        let data = coeffs
            .iter()
            .flat_map(|row| row.iter().map(|c| log_compress(c.norm())))
            .collect();
        Spectrogram::new(data, self.config.n_bins, n_frames)
    }
}

/// L1-normalized Hann-windowed complex exponential of length `len`.
fn time_kernel(freq: f64, len: usize, sr: f64) -> Vec<Complex<f64>> {
    let window: Vec<f64> = (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect();
    let norm: f64 = window.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let center = (len / 2) as f64;
    window
        .iter()
        .enumerate()
        .map(|(n, &w)| {
            let phase = 2.0 * PI * freq * (n as f64 - center) / sr;
            Complex::from_polar(w / norm, phase)
        })
        .collect()
}

/// Log-magnitude CQT of a clip. Builds a fresh kernel bank; use
/// [`CqtKernelBank`] directly when transforming many clips.
pub fn cqt(clip: &AudioClip, config: &CqtConfig) -> Result<Spectrogram> {
    CqtKernelBank::new(clip.sample_rate(), *config)?.transform(clip)
}
