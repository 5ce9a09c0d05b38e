//! Frequency feature masking.
//!
//! Three independent policies zero out whole frequency rows of a
//! spectrogram: a low band starting at row 0, a high band ending at the top
//! row, and a random number of randomly placed bands. Masked entries are set
//! to exactly `0.0` and everything else is left untouched.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Spectrogram;

/// Half-open row interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowRange {
    pub start: usize,
    pub end: usize,
}

impl RowRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, row: usize) -> bool {
        (self.start..self.end).contains(&row)
    }
}

/// Missing keys take their default values when deserialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FfmConfig {
    pub p_low: f64,
    pub p_high: f64,
    pub p_rand: f64,
    pub low_max_extent: f64,
    pub high_max_extent: f64,
    pub rand_max_bands: usize,
    pub rand_max_band_width: f64,
}

impl Default for FfmConfig {
    fn default() -> Self {
        Self {
            p_low: 0.5,
            p_high: 0.5,
            p_rand: 0.5,
            low_max_extent: 0.15,
            high_max_extent: 0.15,
            rand_max_bands: 3,
            rand_max_band_width: 0.15,
        }
    }
}

impl FfmConfig {
    /// Every gate closed: the identity transform.
    pub fn disabled() -> Self {
        Self {
            p_low: 0.0,
            p_high: 0.0,
            p_rand: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p_low", self.p_low), ("p_high", self.p_high), ("p_rand", self.p_rand)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} = {p} is not a probability")));
            }
        }
        for (name, e) in [
            ("low_max_extent", self.low_max_extent),
            ("high_max_extent", self.high_max_extent),
            ("rand_max_band_width", self.rand_max_band_width),
        ] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::config(format!("{name} = {e} must lie in (0, 1)")));
            }
        }
        if self.rand_max_bands == 0 {
            return Err(Error::config("rand_max_bands must be at least 1"));
        }
        Ok(())
    }
}

/// What [`apply_ffm`] did to one spectrogram.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MaskReport {
    pub applied_low: Option<RowRange>,
    pub applied_high: Option<RowRange>,
    pub applied_rand: Vec<RowRange>,
}

impl MaskReport {
    pub fn is_empty(&self) -> bool {
        self.applied_low.is_none() && self.applied_high.is_none() && self.applied_rand.is_empty()
    }

    /// Per-row flag: true if any reported range covers the row.
    pub fn masked_rows(&self, n_freq: usize) -> Vec<bool> {
        let ranges: Vec<RowRange> = self
            .applied_low
            .iter()
            .chain(self.applied_high.iter())
            .chain(self.applied_rand.iter())
            .copied()
            .collect();
        (0..n_freq)
            .map(|r| ranges.iter().any(|range| range.contains(r)))
            .collect()
    }
}

/// Number of rows a policy may mask: `floor(extent * n_freq)`, kept
/// within `1..=n_freq`.
fn extent_rows(extent: f64, n_freq: usize) -> usize {
    ((extent * n_freq as f64).floor() as usize).clamp(1, n_freq)
}

/// Copy of `spec` with `range` zeroed.
pub fn zero_rows(spec: &Spectrogram, range: RowRange) -> Spectrogram {
    let mut out = spec.clone();
    out.zero_rows(range.start, range.end);
    out
}

fn draw_low<R: Rng + ?Sized>(n_freq: usize, max_extent: f64, rng: &mut R) -> RowRange {
    let cutoff = rng.random_range(1..=extent_rows(max_extent, n_freq));
    RowRange::new(0, cutoff)
}

fn draw_high<R: Rng + ?Sized>(n_freq: usize, max_extent: f64, rng: &mut R) -> RowRange {
    let start = rng.random_range(n_freq - extent_rows(max_extent, n_freq)..n_freq);
    RowRange::new(start, n_freq)
}

fn draw_bands<R: Rng + ?Sized>(
    n_freq: usize,
    max_bands: usize,
    max_band_width: f64,
    rng: &mut R,
) -> Vec<RowRange> {
    let count = rng.random_range(1..=max_bands.max(1));
    let widest = extent_rows(max_band_width, n_freq);
    (0..count)
        .map(|_| {
            let width = rng.random_range(1..=widest);
            let start = rng.random_range(0..=n_freq - width);
            RowRange::new(start, start + width)
        })
        .collect()
}

/// Zeroes rows `[0, c)` with `c` uniform on `1..=floor(max_extent * n_freq)`.
pub fn mask_low_freq<R: Rng + ?Sized>(
    spec: &Spectrogram,
    max_extent: f64,
    rng: &mut R,
) -> (Spectrogram, RowRange) {
    let range = draw_low(spec.n_freq(), max_extent, rng);
    (zero_rows(spec, range), range)
}

/// Zeroes rows `[s, n_freq)` with `s` uniform on
/// `n_freq - floor(max_extent * n_freq) ..= n_freq - 1`.
pub fn mask_high_freq<R: Rng + ?Sized>(
    spec: &Spectrogram,
    max_extent: f64,
    rng: &mut R,
) -> (Spectrogram, RowRange) {
    let range = draw_high(spec.n_freq(), max_extent, rng);
    (zero_rows(spec, range), range)
}

/// Zeroes between 1 and `max_bands` bands; bands may overlap.
pub fn mask_random_bands<R: Rng + ?Sized>(
    spec: &Spectrogram,
    max_bands: usize,
    max_band_width: f64,
    rng: &mut R,
) -> (Spectrogram, Vec<RowRange>) {
    let bands = draw_bands(spec.n_freq(), max_bands, max_band_width, rng);
    let mut out = spec.clone();
    for b in &bands {
        out.zero_rows(b.start, b.end);
    }
    (out, bands)
}

/// Runs the low, high and random-band policies behind independent
/// Bernoulli gates, in that order.
///
/// The three gates are drawn first, then the masks, so the gate sequence
/// for a given seed does not depend on the spectrogram size.
pub fn apply_ffm<R: Rng + ?Sized>(
    spec: &Spectrogram,
    config: &FfmConfig,
    rng: &mut R,
) -> Result<(Spectrogram, MaskReport)> {
    config.validate()?;
    let low = rng.random_bool(config.p_low);
    let high = rng.random_bool(config.p_high);
    let rand = rng.random_bool(config.p_rand);

    let n = spec.n_freq();
    let mut out = spec.clone();
    let mut report = MaskReport::default();
    if low {
        let r = draw_low(n, config.low_max_extent, rng);
        out.zero_rows(r.start, r.end);
        report.applied_low = Some(r);
    }
    if high {
        let r = draw_high(n, config.high_max_extent, rng);
        out.zero_rows(r.start, r.end);
        report.applied_high = Some(r);
    }
    if rand {
        for r in draw_bands(n, config.rand_max_bands, config.rand_max_band_width, rng) {
            out.zero_rows(r.start, r.end);
            report.applied_rand.push(r);
        }
    }
    Ok((out, report))
}
