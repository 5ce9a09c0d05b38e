//! Block hyper-parameters shared by the separable and OFD networks.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Residual block; input and output channels match.
    Normal,
    /// Changes the channel count through an entry pointwise conv; no shortcut.
    Transition,
}

fn default_subbands() -> usize {
    4
}

fn default_block_dropout() -> f64 {
    0.1
}

fn default_ofd_dropout() -> f64 {
    0.5
}

fn default_ofd_dilation() -> usize {
    4
}

/// Depthwise-separable residual block: `k1` is the frequency kernel,
/// `k2` the temporal one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DdwsBlockSpec {
    pub k1: usize,
    pub k2: usize,
    pub channels: usize,
    pub kind: BlockKind,
    /// Sub-bands for sub-spectral normalization.
    #[serde(default = "default_subbands")]
    pub subbands: usize,
    #[serde(default = "default_block_dropout")]
    pub dropout: f64,
}

/// The BC-ResMax block takes the same hyper-parameters.
pub type BcResMaxBlockSpec = DdwsBlockSpec;

impl DdwsBlockSpec {
    pub fn normal(channels: usize, k1: usize, k2: usize) -> Self {
        Self {
            k1,
            k2,
            channels,
            kind: BlockKind::Normal,
            subbands: default_subbands(),
            dropout: default_block_dropout(),
        }
    }

    pub fn transition(channels: usize, k1: usize, k2: usize) -> Self {
        Self {
            kind: BlockKind::Transition,
            ..Self::normal(channels, k1, k2)
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        check_kernel("k1", self.k1)?;
        check_kernel("k2", self.k2)?;
        if self.channels == 0 {
            return Err("channels must be positive".into());
        }
        if self.subbands == 0 {
            return Err("subbands must be positive".into());
        }
        check_rate(self.dropout)
    }

    /// Channel-count errors, reported as dimension errors.
    pub(crate) fn check_channels(&self, c_in: usize, needs_even: bool) -> Result<(), String> {
        if needs_even && self.channels % 2 != 0 {
            return Err(format!("channels {} must be even for MFM", self.channels));
        }
        if self.kind == BlockKind::Normal && c_in != self.channels {
            return Err(format!(
                "normal block keeps channels, but input has {c_in} and block {}",
                self.channels
            ));
        }
        Ok(())
    }
}

/// One OFD block: `n` frequency splits, `k1`/`k2` kernels and `m` output
/// channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdBlockSpec {
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
    pub m: usize,
    #[serde(default = "default_ofd_dropout")]
    pub dropout: f64,
    /// Temporal dilation of the stream-2 depthwise conv.
    #[serde(default = "default_ofd_dilation")]
    pub dilation: usize,
}

impl OfdBlockSpec {
    pub fn new(n: usize, k1: usize, k2: usize, m: usize) -> Self {
        Self {
            n,
            k1,
            k2,
            m,
            dropout: default_ofd_dropout(),
            dilation: default_ofd_dilation(),
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n must be at least 1".into());
        }
        check_kernel("k1", self.k1)?;
        check_kernel("k2", self.k2)?;
        if self.m == 0 || self.m % 2 != 0 {
            return Err(format!("m = {} must be positive and even", self.m));
        }
        if self.dilation == 0 {
            return Err("dilation must be at least 1".into());
        }
        check_rate(self.dropout)
    }
}

pub(crate) fn check_kernel(name: &str, k: usize) -> Result<(), String> {
    if k == 0 || k % 2 == 0 {
        Err(format!("{name} = {k} must be odd"))
    } else {
        Ok(())
    }
}

pub(crate) fn check_rate(rate: f64) -> Result<(), String> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(format!("dropout {rate} outside [0, 1)"))
    }
}
