//! Light CNN filter plan.
//!
//! Six convolutions interleaved with five 1x1 network-in-network (NIN)
//! layers. Each layer stores twice its effective filters and halves them
//! with MFM. The first conv uses a 5x5 kernel, the rest 3x3, and BN follows
//! every layer except conv1 and conv3.

use rand::RngCore;

use super::{build_model, forward, ModelSpec, StageSpec, WeightStore};
use crate::error::Result;
use crate::nn::{Matrix, Tensor4};

pub const LCNN_CONV_FILTERS: [usize; 6] = [32, 48, 64, 32, 32, 32];
pub const LCNN_NIN_FILTERS: [usize; 5] = [32, 48, 64, 64, 32];
pub const LCNN_CONV_KERNELS: [usize; 6] = [5, 3, 3, 3, 3, 3];
pub const LCNN_CONV_BATCH_NORM: [bool; 6] = [false, true, false, true, true, true];
pub const LCNN_HEAD_DROPOUT: f64 = 0.5;

/// Conv indices (0-based) followed by a 2x2 max-pool. Pooling after every
/// one of the six convs would leave nothing of a 63-frame input, so conv4
/// is left unpooled.
pub const LCNN_POOL_AFTER_CONV: [usize; 5] = [0, 1, 2, 4, 5];

/// Layer summary of an LCNN stage list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcnnPlan {
    /// `(filters, kernel, batch_norm)` per conv.
    pub convs: Vec<(usize, usize, bool)>,
    /// `(filters, batch_norm)` per NIN.
    pub nins: Vec<(usize, bool)>,
    /// `true` when the layers alternate conv, NIN, conv, .., conv.
    pub alternating: bool,
}

impl LcnnPlan {
    pub fn of(stages: &[StageSpec]) -> Self {
        let mut convs = Vec::new();
        let mut nins = Vec::new();
        let mut order = Vec::new();
        for s in stages {
            match *s {
                StageSpec::Conv {
                    channels,
                    kernel,
                    batch_norm,
                } => {
                    convs.push((channels, kernel, batch_norm));
                    order.push(true);
                }
                StageSpec::Nin {
                    channels,
                    batch_norm,
                } => {
                    nins.push((channels, batch_norm));
                    order.push(false);
                }
                _ => {}
            }
        }
        let alternating = order
            .iter()
            .enumerate()
            .all(|(i, &is_conv)| is_conv == (i % 2 == 0))
            && order.last() == Some(&true);
        Self {
            convs,
            nins,
            alternating,
        }
    }

    pub fn published() -> Self {
        Self {
            convs: (0..6)
                .map(|i| (LCNN_CONV_FILTERS[i], LCNN_CONV_KERNELS[i], LCNN_CONV_BATCH_NORM[i]))
                .collect(),
            nins: LCNN_NIN_FILTERS.iter().map(|&c| (c, true)).collect(),
            alternating: true,
        }
    }
}

pub(crate) fn default_stages() -> Vec<StageSpec> {
    let mut stages = Vec::new();
    for i in 0..6 {
        if i > 0 {
            stages.push(StageSpec::Nin {
                channels: LCNN_NIN_FILTERS[i - 1],
                batch_norm: true,
            });
        }
        stages.push(StageSpec::Conv {
            channels: LCNN_CONV_FILTERS[i],
            kernel: LCNN_CONV_KERNELS[i],
            batch_norm: LCNN_CONV_BATCH_NORM[i],
        });
        if LCNN_POOL_AFTER_CONV.contains(&i) {
            stages.push(StageSpec::Pool { freq: 2, time: 2 });
        }
    }
    stages
}

/// Forward pass of the default LCNN.
pub fn lcnn_forward(
    x: &Tensor4,
    weights: &WeightStore,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<Matrix> {
    let model = build_model(&ModelSpec::lcnn())?;
    forward(&model, weights, x, training, rng)
}
