use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioClip, Spectrogram};
use crate::error::{Error, Result};

/// Frames produced by a centered STFT: `1 + floor(len / hop)`.
pub fn frame_count(len: usize, hop: usize) -> usize {
    1 + len / hop
}

/// Periodic Hann window.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos())
        .collect()
}

/// Mirror index into `0..len` without repeating the edge sample.
fn reflect(i: isize, len: usize) -> usize {
    let len = len as isize;
    let mut i = i;
    if i < 0 {
        i = -i;
    }
    if i >= len {
        i = 2 * (len - 1) - i;
    }
    i as usize
}

pub(crate) fn reflect_pad(samples: &[f32], pad: usize) -> Result<Vec<f64>> {
    if samples.len() <= pad {
        return Err(Error::InputTooShort(format!(
            "{} samples cannot be reflect-padded by {pad}",
            samples.len()
        )));
    }
    let n = samples.len();
    Ok((0..n + 2 * pad)
        .map(|j| samples[reflect(j as isize - pad as isize, n)] as f64)
        .collect())
}

/// Power STFT, `[window_len/2 + 1, 1 + len/hop]`, with a periodic Hann
/// window and reflect padding of `window_len/2` on both sides.
pub fn stft_power(clip: &AudioClip, window_len: usize, hop: usize) -> Result<Spectrogram> {
    let (data, n_bins, n_frames) = stft_power_f64(clip.samples(), window_len, hop)?;
    Spectrogram::new(data.into_iter().map(|v| v as f32).collect(), n_bins, n_frames)
}

pub(crate) fn stft_power_f64(
    samples: &[f32],
    window_len: usize,
    hop: usize,
) -> Result<(Vec<f64>, usize, usize)> {
    if window_len == 0 || window_len % 2 != 0 {
        return Err(Error::config(format!("window length {window_len} must be even and positive")));
    }
    if hop == 0 {
        return Err(Error::config("hop must be positive"));
    }
    if samples.is_empty() {
        return Err(Error::InputTooShort("empty clip".into()));
    }
    let padded = reflect_pad(samples, window_len / 2)?;
    let n_frames = frame_count(samples.len(), hop);
    let n_bins = window_len / 2 + 1;
    let window = hann_window(window_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window_len);

    let mut out = vec![0.0f64; n_bins * n_frames];
    let mut buf = vec![Complex::new(0.0, 0.0); window_len];
    for t in 0..n_frames {
        let start = t * hop;
        for (n, slot) in buf.iter_mut().enumerate() {
            *slot = Complex::new(padded[start + n] * window[n], 0.0);
        }
        fft.process(&mut buf);
        for (k, c) in buf[..n_bins].iter().enumerate() {
            out[k * n_frames + t] = c.norm_sqr();
        }
    }
    Ok((out, n_bins, n_frames))
}
