//! Audio anti-spoofing toolkit.
//!
//! Spectrogram feature extraction (mel and constant-Q), frequency feature
//! masking and mixup augmentation, forward passes for the LCNN, DDWS,
//! BC-ResMax and OFD networks, weighted score fusion and equal error rate
//! scoring.
//!
//! Everything here is a pure function of its inputs. Randomness is always
//! supplied by the caller as an explicit RNG.

pub mod augment;
pub mod error;
pub mod eval;
pub mod features;
pub mod models;
pub mod nn;
pub mod npy;

pub use error::{Error, Result};
