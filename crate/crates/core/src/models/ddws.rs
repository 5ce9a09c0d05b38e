//! Depthwise-separable residual block.
//!
//! `f1`: depthwise `1 x k2` conv, sub-spectral norm, swish.
//! `f2`: depthwise `k1 x 1` conv, sub-spectral norm, ReLU.
//! `g`: pointwise conv, ReLU, spatial dropout.
//!
//! A normal block returns `x + g(f2(f1(x)))`. A transition block first maps
//! the input to the new width (pointwise conv, BN, ReLU) and drops the
//! shortcut.

use rand::RngCore;

use super::blocks::{BlockKind, DdwsBlockSpec};
use super::layers::{join, Conv, Norm, Pass};
use super::weights::{ParamDecl, WeightStore};
use crate::error::{Error, Result};
use crate::nn::{relu, spatial_dropout, swish, Tensor4};

#[derive(Debug, Clone)]
pub struct DdwsBlock {
    spec: DdwsBlockSpec,
    entry: Option<(Conv, Norm)>,
    dw_t: Conv,
    ssn1: Norm,
    dw_f: Conv,
    ssn2: Norm,
    pw: Conv,
}

impl DdwsBlock {
    pub fn new(prefix: &str, c_in: usize, spec: &DdwsBlockSpec) -> Result<Self> {
        spec.check().map_err(|reason| Error::Validation {
            location: prefix.to_string(),
            reason,
        })?;
        spec.check_channels(c_in, false)
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
            dw_t: Conv::depthwise(join(prefix, "f1_dw"), c, (1, spec.k2)),
            ssn1: Norm::subspectral(join(prefix, "f1_ssn"), c, spec.subbands),
            dw_f: Conv::depthwise(join(prefix, "f2_dw"), c, (spec.k1, 1)),
            ssn2: Norm::subspectral(join(prefix, "f2_ssn"), c, spec.subbands),
            pw: Conv::pointwise(join(prefix, "g_pw"), c, c).with_bias(),
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
        self.dw_t.decls(out);
        self.ssn1.decls(out);
        self.dw_f.decls(out);
        self.ssn2.decls(out);
        self.pw.decls(out);
    }

    pub fn forward(&self, x: &Tensor4, w: &WeightStore, pass: &mut Pass) -> Result<Tensor4> {
        let h = match &self.entry {
            Some((conv, bn)) => relu(&bn.forward(&conv.forward(x, w)?, w, pass)?),
            None => x.clone(),
        };
        let f1 = swish(&self.ssn1.forward(&self.dw_t.forward(&h, w)?, w, pass)?);
        let f2 = relu(&self.ssn2.forward(&self.dw_f.forward(&f1, w)?, w, pass)?);
        let g = relu(&self.pw.forward(&f2, w)?);
        let g = spatial_dropout(&g, self.spec.dropout, pass.rng, pass.training)?;
        match self.spec.kind {
            BlockKind::Normal => x.add(&g),
            BlockKind::Transition => Ok(g),
        }
    }
}

/// Runs one block whose parameters live under `prefix` in `weights`.
pub fn ddws_block_forward(
    x: &Tensor4,
    spec: &DdwsBlockSpec,
    prefix: &str,
    weights: &WeightStore,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<Tensor4> {
    let block = DdwsBlock::new(prefix, x.channels(), spec)?;
    block.forward(x, weights, &mut Pass::new(training, rng))
}
