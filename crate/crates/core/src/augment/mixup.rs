use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Spectrogram;

/// Range of alpha values the augmentation was tuned for.
pub const RECOMMENDED_ALPHA: (f64, f64) = (0.4, 0.9);

/// Shape parameter of the symmetric Beta(alpha, alpha) mixing distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixupParams {
    alpha: f64,
}

impl MixupParams {
    /// Alphas outside `RECOMMENDED_ALPHA` are accepted with a warning.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::config(format!("mixup alpha must be positive, got {alpha}")));
        }
        if alpha < RECOMMENDED_ALPHA.0 || alpha > RECOMMENDED_ALPHA.1 {
            log::warn!(
                "mixup alpha {alpha} is outside the recommended range {:?}",
                RECOMMENDED_ALPHA
            );
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Soft class label: 1.0 is bonafide, 0.0 is fake.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(f64);

impl Label {
    pub const BONAFIDE: Label = Label(1.0);
    pub const FAKE: Label = Label(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::config(format!("label {value} outside [0, 1]")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Draws lambda ~ Beta(alpha, alpha).
pub fn sample_lambda<R: Rng + ?Sized>(params: &MixupParams, rng: &mut R) -> f64 {
    // alpha > 0 is checked at construction
    let beta = Beta::new(params.alpha, params.alpha).expect("validated alpha");
    beta.sample(rng)
}

/// `(lambda * x_i + (1 - lambda) * x_j, lambda * y_i + (1 - lambda) * y_j)`.
pub fn mixup(
    x_i: &Spectrogram,
    x_j: &Spectrogram,
    y_i: Label,
    y_j: Label,
    lambda: f64,
) -> Result<(Spectrogram, Label)> {
    if x_i.shape() != x_j.shape() {
        return Err(Error::dim(format!(
            "cannot mix {:?} with {:?}",
            x_i.shape(),
            x_j.shape()
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("lambda {lambda} outside [0, 1]")));
    }
    let rest = 1.0 - lambda;
    let data = x_i
        .data()
        .iter()
        .zip(x_j.data())
        .map(|(&a, &b)| (lambda * a as f64 + rest * b as f64) as f32)
        .collect();
    let label = (lambda * y_i.value() + rest * y_j.value()).clamp(0.0, 1.0);
    Ok((
        Spectrogram::new(data, x_i.n_freq(), x_i.n_frames())?,
        Label(label),
    ))
}
