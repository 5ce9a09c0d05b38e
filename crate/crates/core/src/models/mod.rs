//! Spoofing-detection networks assembled from a JSON [`ModelSpec`].
//!
//! Parameters live in a [`WeightStore`] keyed by path-like names
//! (`stage3.f1_dw.weight`, `head.fc.bias`, ..). Logits are ordered
//! `[fake, bonafide]`.

mod bcresmax;
mod blocks;
mod ddws;
mod layers;
mod lcnn;
mod ofd;
mod weights;

pub use bcresmax::{bc_resmax_block_forward, BcResMaxBlock};
pub use blocks::{BcResMaxBlockSpec, BlockKind, DdwsBlockSpec, OfdBlockSpec};
pub use ddws::{ddws_block_forward, DdwsBlock};
pub use layers::Pass;
pub use lcnn::{
    lcnn_forward, LcnnPlan, LCNN_CONV_BATCH_NORM, LCNN_CONV_FILTERS, LCNN_CONV_KERNELS,
    LCNN_HEAD_DROPOUT, LCNN_NIN_FILTERS, LCNN_POOL_AFTER_CONV,
};
pub use ofd::{
    disjoint_rows, ofd_block_forward, ofd_merge, ofd_split, overlapped_rows, OfdBlock, OfdSplit,
};
pub use weights::{
    check_params, init_params, ParamDecl, ParamInit, WeightEntry, WeightStore, MAGIC, VERSION,
};

use std::fmt;
use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{global_avg_pool, max_pool, mfm, relu, spatial_dropout, Matrix, Tensor4};
use layers::{join, Conv, Linear, Norm};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Number of OFD blocks and the blocks (1-based) whose kernels must be 1.
pub const OFD_BLOCK_COUNT: usize = 6;
pub const OFD_UNIT_KERNEL_BLOCKS: [usize; 2] = [5, 6];
pub const OFD_DROPOUT: f64 = 0.5;
pub const OFD_DILATION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Lcnn,
    Ddws,
    BcResmax,
    Ofd,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [Self::Lcnn, Self::Ddws, Self::BcResmax, Self::Ofd];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lcnn => "lcnn",
            Self::Ddws => "ddws",
            Self::BcResmax => "bc_resmax",
            Self::Ofd => "ofd",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown model {s:?}; expected lcnn, ddws, bc_resmax or ofd")))
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stem: conv, BN, ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StemSpec {
    pub channels: usize,
    pub kernel: usize,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn half() -> f64 {
    0.5
}

/// Head: global average pool, BN, dropout, linear to 2 logits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    #[serde(default = "half")]
    pub dropout: f64,
}

impl Default for HeadSpec {
    fn default() -> Self {
        Self { dropout: half() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StageSpec {
    /// LCNN conv followed by MFM; `channels` is the post-MFM count.
    Conv {
        channels: usize,
        kernel: usize,
        #[serde(default)]
        batch_norm: bool,
    },
    /// LCNN 1x1 conv followed by MFM.
    Nin {
        channels: usize,
        #[serde(default = "yes")]
        batch_norm: bool,
    },
    /// Non-overlapping max-pool.
    Pool { freq: usize, time: usize },
    Ddws(DdwsBlockSpec),
    BcResmax(BcResMaxBlockSpec),
    Ofd(OfdBlockSpec),
}

impl StageSpec {
    fn type_name(&self) -> &'static str {
        match self {
            Self::Conv { .. } => "conv",
            Self::Nin { .. } => "nin",
            Self::Pool { .. } => "pool",
            Self::Ddws(_) => "ddws",
            Self::BcResmax(_) => "bc_resmax",
            Self::Ofd(_) => "ofd",
        }
    }

    fn allowed_in(&self, kind: ModelKind) -> bool {
        match self {
            Self::Pool { .. } => true,
            Self::Conv { .. } | Self::Nin { .. } => kind == ModelKind::Lcnn,
            Self::Ddws(_) => kind == ModelKind::Ddws,
            Self::BcResmax(_) => kind == ModelKind::BcResmax,
            Self::Ofd(_) => kind == ModelKind::Ofd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub schema_version: u32,
    pub name: ModelKind,
    /// Reject, rather than warn about, departures from the published
    /// architecture constants.
    #[serde(default)]
    pub strict_paper: bool,
    #[serde(default)]
    pub stem: Option<StemSpec>,
    pub stages: Vec<StageSpec>,
    #[serde(default)]
    pub head: HeadSpec,
}

const SEPARABLE_WIDTHS: [usize; 4] = [16, 24, 32, 40];

impl ModelSpec {
    pub fn preset(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Lcnn => Self::lcnn(),
            ModelKind::Ddws => Self::ddws(),
            ModelKind::BcResmax => Self::bc_resmax(),
            ModelKind::Ofd => Self::ofd(),
        }
    }

    pub fn lcnn() -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            name: ModelKind::Lcnn,
            strict_paper: false,
            stem: None,
            stages: lcnn::default_stages(),
            head: HeadSpec {
                dropout: LCNN_HEAD_DROPOUT,
            },
        }
    }

    fn separable(kind: ModelKind, wrap: fn(DdwsBlockSpec) -> StageSpec) -> Self {
        let stages = SEPARABLE_WIDTHS
            .iter()
            .flat_map(|&w| {
                [
                    wrap(DdwsBlockSpec::transition(w, 3, 3)),
                    wrap(DdwsBlockSpec::normal(w, 3, 3)),
                ]
            })
            .collect();
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            name: kind,
            strict_paper: false,
            stem: Some(StemSpec {
                channels: SEPARABLE_WIDTHS[0],
                kernel: 5,
                stride: 2,
            }),
            stages,
            head: HeadSpec::default(),
        }
    }

    pub fn ddws() -> Self {
        Self::separable(ModelKind::Ddws, StageSpec::Ddws)
    }

    pub fn bc_resmax() -> Self {
        Self::separable(ModelKind::BcResmax, StageSpec::BcResmax)
    }

    pub fn ofd() -> Self {
        let b = |n, k, m| StageSpec::Ofd(OfdBlockSpec::new(n, k, k, m));
        let pool = StageSpec::Pool { freq: 2, time: 1 };
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            name: ModelKind::Ofd,
            strict_paper: false,
            stem: Some(StemSpec {
                channels: 16,
                kernel: 3,
                stride: 1,
            }),
            stages: vec![
                b(4, 3, 16),
                b(4, 3, 16),
                pool,
                b(4, 3, 32),
                b(4, 3, 32),
                pool,
                b(2, 1, 32),
                b(2, 1, 32),
            ],
            head: HeadSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model spec serializes")
    }

    /// Departures from the published constants, as `(location, reason)`.
    pub fn published_deviations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        match self.name {
            ModelKind::Lcnn => {
                let plan = LcnnPlan::of(&self.stages);
                if plan != LcnnPlan::published() {
                    out.push((
                        "stages".to_string(),
                        format!(
                            "LCNN plan {plan:?} differs from the published plan {:?}",
                            LcnnPlan::published()
                        ),
                    ));
                }
            }
            ModelKind::Ofd => {
                let blocks: Vec<(usize, &OfdBlockSpec)> = self
                    .stages
                    .iter()
                    .enumerate()
                    .filter_map(|(i, s)| match s {
                        StageSpec::Ofd(b) => Some((i, b)),
                        _ => None,
                    })
                    .collect();
                if blocks.len() != OFD_BLOCK_COUNT {
                    out.push((
                        "stages".to_string(),
                        format!("{} OFD blocks, expected {OFD_BLOCK_COUNT}", blocks.len()),
                    ));
                }
                for (j, (i, b)) in blocks.iter().enumerate() {
                    let loc = format!("stage {i} (ofd block {})", j + 1);
                    if OFD_UNIT_KERNEL_BLOCKS.contains(&(j + 1)) && (b.k1 != 1 || b.k2 != 1) {
                        out.push((loc.clone(), format!("k1 = {}, k2 = {}; both must be 1", b.k1, b.k2)));
                    }
                    if b.dilation != OFD_DILATION {
                        out.push((loc.clone(), format!("dilation {} instead of {OFD_DILATION}", b.dilation)));
                    }
                    if b.dropout != OFD_DROPOUT {
                        out.push((loc, format!("dropout {} instead of {OFD_DROPOUT}", b.dropout)));
                    }
                }
            }
            ModelKind::Ddws | ModelKind::BcResmax => {}
        }
        if self.head.dropout != 0.5 {
            out.push(("head".to_string(), format!("dropout {} instead of 0.5", self.head.dropout)));
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Stage {
    Conv { conv: Conv, bn: Option<Norm> },
    Pool(usize, usize),
    Ddws(DdwsBlock),
    BcResMax(BcResMaxBlock),
    Ofd(OfdBlock),
}

/// A validated network. Immutable; forward passes only read it.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    stem: Option<(Conv, Norm)>,
    stages: Vec<Stage>,
    head_bn: Norm,
    head_fc: Linear,
}

fn invalid(location: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::Validation {
        location: location.into(),
        reason: reason.into(),
    }
}

fn check_lcnn_layer(loc: &str, channels: usize, kernel: usize) -> Result<()> {
    if channels == 0 {
        return Err(invalid(loc, "channels must be positive"));
    }
    blocks::check_kernel("kernel", kernel).map_err(|r| invalid(loc, r))
}

pub fn build_model(spec: &ModelSpec) -> Result<Model> {
    if spec.schema_version != MODEL_SCHEMA_VERSION {
        return Err(invalid(
            "schema_version",
            format!("{} is not supported (expected {MODEL_SCHEMA_VERSION})", spec.schema_version),
        ));
    }
    for (loc, reason) in spec.published_deviations() {
        if spec.strict_paper {
            return Err(invalid(loc, reason));
        }
        log::warn!("{} model departs from the published architecture at {loc}: {reason}", spec.name);
    }
    blocks::check_rate(spec.head.dropout).map_err(|r| invalid("head", r))?;

    let mut c = 1;
    let stem = match (spec.name, spec.stem) {
        (ModelKind::Lcnn, Some(_)) => {
            return Err(invalid("stem", "LCNN starts directly with its first conv stage"))
        }
        (ModelKind::Lcnn, None) => None,
        (_, None) => return Err(invalid("stem", format!("{} needs a stem", spec.name))),
        (_, Some(s)) => {
            check_lcnn_layer("stem", s.channels, s.kernel)?;
            if s.stride == 0 {
                return Err(invalid("stem", "stride must be at least 1"));
            }
            c = s.channels;
            Some((
                Conv::new("stem.conv".into(), 1, s.channels, (s.kernel, s.kernel))
                    .with_stride(s.stride, s.stride),
                Norm::batch("stem.bn".into(), s.channels),
            ))
        }
    };

    let mut stages = Vec::with_capacity(spec.stages.len());
    for (i, st) in spec.stages.iter().enumerate() {
        let prefix = format!("stage{i}");
        let loc = format!("stage {i} ({})", st.type_name());
        if !st.allowed_in(spec.name) {
            return Err(invalid(loc, format!("not allowed in a {} model", spec.name)));
        }
        let relabel = |e: Error| match e {
            Error::Validation { reason, .. } | Error::Dimension(reason) => {
                invalid(loc.clone(), reason)
            }
            other => other,
        };
        let stage = match *st {
            StageSpec::Conv {
                channels,
                kernel,
                batch_norm,
            } => {
                check_lcnn_layer(&loc, channels, kernel)?;
                let conv = Conv::new(join(&prefix, "conv"), c, 2 * channels, (kernel, kernel));
                c = channels;
                Stage::Conv {
                    conv,
                    bn: batch_norm.then(|| Norm::batch(join(&prefix, "bn"), channels)),
                }
            }
            StageSpec::Nin {
                channels,
                batch_norm,
            } => {
                check_lcnn_layer(&loc, channels, 1)?;
                let conv = Conv::pointwise(join(&prefix, "conv"), c, 2 * channels);
                c = channels;
                Stage::Conv {
                    conv,
                    bn: batch_norm.then(|| Norm::batch(join(&prefix, "bn"), channels)),
                }
            }
            StageSpec::Pool { freq, time } => {
                if freq == 0 || time == 0 {
                    return Err(invalid(loc, "pool window must be at least 1x1"));
                }
                Stage::Pool(freq, time)
            }
            StageSpec::Ddws(b) => {
                let block = DdwsBlock::new(&prefix, c, &b).map_err(relabel)?;
                c = block.out_channels();
                Stage::Ddws(block)
            }
            StageSpec::BcResmax(b) => {
                let block = BcResMaxBlock::new(&prefix, c, &b).map_err(relabel)?;
                c = block.out_channels();
                Stage::BcResMax(block)
            }
            StageSpec::Ofd(b) => {
                let block = OfdBlock::new(&prefix, c, &b).map_err(relabel)?;
                c = block.out_channels();
                Stage::Ofd(block)
            }
        };
        stages.push(stage);
    }

    Ok(Model {
        spec: spec.clone(),
        stem,
        stages,
        head_bn: Norm::batch("head.bn".into(), c),
        head_fc: Linear {
            name: "head.fc".into(),
            inputs: c,
            outputs: 2,
        },
    })
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.name
    }

    /// Channels entering the head.
    pub fn feature_channels(&self) -> usize {
        self.head_fc.inputs
    }

    /// Every parameter in forward order.
    pub fn param_decls(&self) -> Vec<ParamDecl> {
        let mut out = Vec::new();
        if let Some((conv, bn)) = &self.stem {
            conv.decls(&mut out);
            bn.decls(&mut out);
        }
        for st in &self.stages {
            match st {
                Stage::Conv { conv, bn } => {
                    conv.decls(&mut out);
                    if let Some(bn) = bn {
                        bn.decls(&mut out);
                    }
                }
                Stage::Pool(..) => {}
                Stage::Ddws(b) => b.decls(&mut out),
                Stage::BcResMax(b) => b.decls(&mut out),
                Stage::Ofd(b) => b.decls(&mut out),
            }
        }
        self.head_bn.decls(&mut out);
        self.head_fc.decls(&mut out);
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.param_decls()
            .iter()
            .map(|d| d.shape.iter().product::<usize>())
            .sum()
    }

    /// Fails unless `weights` holds every parameter with the right shape.
    pub fn check_weights(&self, weights: &WeightStore) -> Result<()> {
        check_params(&self.param_decls(), weights)
    }

    /// Everything up to and including global average pooling: `[N, C]`.
    pub fn features(&self, x: &Tensor4, w: &WeightStore, pass: &mut Pass) -> Result<Matrix> {
        if x.channels() != 1 {
            return Err(Error::dim(format!(
                "model input must have 1 channel, got {}",
                x.channels()
            )));
        }
        let mut h = match &self.stem {
            Some((conv, bn)) => relu(&bn.forward(&conv.forward(x, w)?, w, pass)?),
            None => x.clone(),
        };
        for (i, st) in self.stages.iter().enumerate() {
            h = match st {
                Stage::Conv { conv, bn } => {
                    let y = mfm(&conv.forward(&h, w)?)?;
                    match bn {
                        Some(bn) => bn.forward(&y, w, pass)?,
                        None => y,
                    }
                }
                Stage::Pool(kf, kt) => max_pool(&h, *kf, *kt).map_err(|e| {
                    Error::dim(format!("stage {i}: input too small for pooling: {e}"))
                })?,
                Stage::Ddws(b) => b.forward(&h, w, pass)?,
                Stage::BcResMax(b) => b.forward(&h, w, pass)?,
                Stage::Ofd(b) => b.forward(&h, w, pass)?,
            };
        }
        Ok(global_avg_pool(&h))
    }

    /// Logits `[N, 2]` ordered `[fake, bonafide]`.
    pub fn forward(&self, x: &Tensor4, w: &WeightStore, pass: &mut Pass) -> Result<Matrix> {
        let feats = self.features(x, w, pass)?.into_tensor();
        let feats = self.head_bn.forward(&feats, w, pass)?;
        let feats = spatial_dropout(&feats, self.spec.head.dropout, pass.rng, pass.training)?;
        self.head_fc.forward(&Matrix::from_tensor(feats)?, w)
    }
}

pub fn init_weights(model: &Model, seed: u64) -> Result<WeightStore> {
    init_params(&model.param_decls(), seed)
}

pub fn save_weights(weights: &WeightStore, path: impl AsRef<Path>) -> Result<()> {
    weights.save(path)
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightStore> {
    WeightStore::load(path)
}

pub fn forward(
    model: &Model,
    weights: &WeightStore,
    x: &Tensor4,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<Matrix> {
    model.forward(x, weights, &mut Pass::new(training, rng))
}

/// Softmax probability of the bonafide class per row of `[N, 2]` logits.
pub fn bonafide_scores(logits: &Matrix) -> Result<Vec<f64>> {
    if logits.cols() != 2 {
        return Err(Error::dim(format!("expected 2 logits per row, got {}", logits.cols())));
    }
    Ok((0..logits.rows())
        .map(|r| {
            let (fake, bona) = (logits.get(r, 0) as f64, logits.get(r, 1) as f64);
            1.0 / (1.0 + (fake - bona).exp())
        })
        .collect())
}
