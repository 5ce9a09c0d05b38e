//! Broadcasted residual block with max-feature-map activation.
//!
//! Frequency path: depthwise `k1 x 1` conv, MFM (`C -> C/2`), sub-spectral
//! norm, pointwise expansion back to `C`. Its output `x1` feeds the temporal
//! path: frequency average, depthwise `1 x k2` conv, BN, swish, pointwise
//! conv, spatial dropout, broadcast over frequency.
//!
//! A normal block returns `x + x1 + broadcast`; a transition block maps the
//! input to the new width first and returns `x1 + broadcast`. MFM takes the
//! place of the usual output activation, so nothing follows the sum.

use rand::RngCore;

use super::blocks::{BcResMaxBlockSpec, BlockKind};
use super::layers::{join, Conv, Norm, Pass};
use super::weights::{ParamDecl, WeightStore};
use crate::error::{Error, Result};
use crate::nn::{broadcast_freq, freq_avg, mfm, relu, spatial_dropout, swish, Tensor4};

#[derive(Debug, Clone)]
pub struct BcResMaxBlock {
    spec: BcResMaxBlockSpec,
    entry: Option<(Conv, Norm)>,
    dw_f: Conv,
    ssn: Norm,
    expand: Conv,
    dw_t: Conv,
    bn_t: Norm,
    pw_t: Conv,
}

impl BcResMaxBlock {
    pub fn new(prefix: &str, c_in: usize, spec: &BcResMaxBlockSpec) -> Result<Self> {
        spec.check().map_err(|reason| Error::Validation {
            location: prefix.to_string(),
            reason,
        })?;
        spec.check_channels(c_in, true)
            .map_err(|reason| Error::dim(format!("{prefix}: {reason}")))?;
        let c = spec.channels;
        let entry = (spec.kind == BlockKind::Transition).then(|| {
            (
                Conv::pointwise(join(prefix, "entry"), c_in, c),
                Norm::batch(join(prefix, "entry_bn"), c),
            )
        });
        Ok(Self {
            spec: *spec,
            entry,
            dw_f: Conv::depthwise(join(prefix, "freq_dw"), c, (spec.k1, 1)),
            ssn: Norm::subspectral(join(prefix, "freq_ssn"), c / 2, spec.subbands),
            expand: Conv::pointwise(join(prefix, "freq_pw"), c / 2, c).with_bias(),
            dw_t: Conv::depthwise(join(prefix, "time_dw"), c, (1, spec.k2)),
            bn_t: Norm::batch(join(prefix, "time_bn"), c),
            pw_t: Conv::pointwise(join(prefix, "time_pw"), c, c).with_bias(),
        })
    }

    pub fn out_channels(&self) -> usize {
        self.spec.channels
    }

    pub fn decls(&self, out: &mut Vec<ParamDecl>) {
        if let Some((conv, bn)) = &self.entry {
            conv.decls(out);
            bn.decls(out);
        }
        self.dw_f.decls(out);
        self.ssn.decls(out);
        self.expand.decls(out);
        self.dw_t.decls(out);
        self.bn_t.decls(out);
        self.pw_t.decls(out);
    }

    pub fn forward(&self, x: &Tensor4, w: &WeightStore, pass: &mut Pass) -> Result<Tensor4> {
        let h = match &self.entry {
            Some((conv, bn)) => relu(&bn.forward(&conv.forward(x, w)?, w, pass)?),
            None => x.clone(),
        };
        let m = mfm(&self.dw_f.forward(&h, w)?)?;
        let x1 = self.expand.forward(&self.ssn.forward(&m, w, pass)?, w)?;

        let t = self.dw_t.forward(&freq_avg(&x1), w)?;
        let t = swish(&self.bn_t.forward(&t, w, pass)?);
        let t = self.pw_t.forward(&t, w)?;
        let t = spatial_dropout(&t, self.spec.dropout, pass.rng, pass.training)?;
        let b = broadcast_freq(&t, x1.freq())?;

        let y = x1.add(&b)?;
        match self.spec.kind {
            BlockKind::Normal => x.add(&y),
            BlockKind::Transition => Ok(y),
        }
    }
}

pub fn bc_resmax_block_forward(
    x: &Tensor4,
    spec: &BcResMaxBlockSpec,
    prefix: &str,
    weights: &WeightStore,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<Tensor4> {
    let block = BcResMaxBlock::new(prefix, x.channels(), spec)?;
    block.forward(x, weights, &mut Pass::new(training, rng))
}
