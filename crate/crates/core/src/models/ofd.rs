//! Overlapped frequency-distributed (OFD) block.
//!
//! The input of height `H` is zero-padded to a multiple of `2n` and cut into
//! `n` disjoint parts `X(k)` and `n - 1` overlapped parts `Y(k)`, each `2s`
//! rows tall with `s = H / 2n`. `Y(k)` straddles the seam between `X(k)` and
//! `X(k+1)`. Every part runs through its own `f` (conv, BN, ReLU, conv, BN,
//! all `k1 x 1`), and the halves that cover the same rows are merged by an
//! element-wise max.
//!
//! A second stream averages the input over frequency, runs a dilated
//! temporal depthwise conv, BN, swish, a pointwise conv to `m` channels,
//! ReLU and dropout, and is broadcast back over frequency. The block output
//! is the sum of the two streams.

use rand::RngCore;

use super::blocks::OfdBlockSpec;
use super::layers::{join, Conv, Norm, Pass};
use super::weights::{ParamDecl, WeightStore};
use crate::error::{Error, Result};
use crate::nn::{broadcast_freq, freq_avg, relu, spatial_dropout, swish, Tensor4};

/// Parts produced by [`ofd_split`].
#[derive(Debug, Clone)]
pub struct OfdSplit {
    /// `X(1..=n)`; `X(k)` covers padded rows `[2(k-1)s, 2ks)`.
    pub disjoint: Vec<Tensor4>,
    /// `Y(1..n)`; `Y(k)` covers padded rows `[(2k-1)s, (2k+1)s)`.
    pub overlapped: Vec<Tensor4>,
    pub s: usize,
    pub padded_height: usize,
}

/// Row range `[start, end)` of `X(k)` (1-based `k`) in the padded input.
pub fn disjoint_rows(k: usize, s: usize) -> (usize, usize) {
    (2 * (k - 1) * s, 2 * k * s)
}

/// Row range `[start, end)` of `Y(k)` (1-based `k`) in the padded input.
pub fn overlapped_rows(k: usize, s: usize) -> (usize, usize) {
    ((2 * k - 1) * s, (2 * k + 1) * s)
}

pub fn ofd_split(x: &Tensor4, n: usize) -> Result<OfdSplit> {
    if n == 0 {
        return Err(Error::config("OFD split needs n >= 1"));
    }
    let h = x.freq();
    if h == 0 {
        return Err(Error::dim("OFD split of an empty frequency axis"));
    }
    let padded_height = h.div_ceil(2 * n) * 2 * n;
    let s = padded_height / (2 * n);
    let padded = x.pad_freq(padded_height)?;
    let disjoint = (1..=n)
        .map(|k| {
            let (a, b) = disjoint_rows(k, s);
            padded.slice_freq(a, b)
        })
        .collect::<Result<_>>()?;
    let overlapped = (1..n)
        .map(|k| {
            let (a, b) = overlapped_rows(k, s);
            padded.slice_freq(a, b)
        })
        .collect::<Result<_>>()?;
    Ok(OfdSplit {
        disjoint,
        overlapped,
        s,
        padded_height,
    })
}

/// Reassembles processed parts into the `2n` sub-images
/// `f(X1)_1, Z1, .., Z(2n-2), f(Xn)_2`, concatenated along frequency.
///
/// `Z(2k-1) = max(f(Xk)_2, f(Yk)_1)` and `Z(2k) = max(f(X(k+1))_1, f(Yk)_2)`,
/// where `_1` is the first `s` rows of a part and `_2` the last `s`.
pub fn ofd_merge(fx: &[Tensor4], fy: &[Tensor4], s: usize) -> Result<Tensor4> {
    let n = fx.len();
    if n == 0 || fy.len() + 1 != n {
        return Err(Error::dim(format!(
            "OFD merge needs n disjoint and n - 1 overlapped parts, got {} and {}",
            fx.len(),
            fy.len()
        )));
    }
    let upper = |t: &Tensor4| t.slice_freq(0, s);
    let lower = |t: &Tensor4| t.slice_freq(s, 2 * s);
    let mut pieces = Vec::with_capacity(2 * n);
    pieces.push(upper(&fx[0])?);
    for k in 0..n - 1 {
        pieces.push(lower(&fx[k])?.maximum(&upper(&fy[k])?)?);
        pieces.push(upper(&fx[k + 1])?.maximum(&lower(&fy[k])?)?);
    }
    pieces.push(lower(&fx[n - 1])?);
    Tensor4::concat_freq(&pieces)
}

#[derive(Debug, Clone)]
struct PartStream {
    conv1: Conv,
    bn1: Norm,
    conv2: Conv,
    bn2: Norm,
}

impl PartStream {
    fn new(prefix: String, c_in: usize, m: usize, k1: usize) -> Self {
        Self {
            conv1: Conv::new(join(&prefix, "conv1"), c_in, m, (k1, 1)),
            bn1: Norm::batch(join(&prefix, "bn1"), m),
            conv2: Conv::new(join(&prefix, "conv2"), m, m, (k1, 1)),
            bn2: Norm::batch(join(&prefix, "bn2"), m),
        }
    }

    fn decls(&self, out: &mut Vec<ParamDecl>) {
        self.conv1.decls(out);
        self.bn1.decls(out);
        self.conv2.decls(out);
        self.bn2.decls(out);
    }

    fn forward(&self, x: &Tensor4, w: &WeightStore, pass: &Pass) -> Result<Tensor4> {
        let h = relu(&self.bn1.forward(&self.conv1.forward(x, w)?, w, pass)?);
        self.bn2.forward(&self.conv2.forward(&h, w)?, w, pass)
    }
}

#[derive(Debug, Clone)]
pub struct OfdBlock {
    spec: OfdBlockSpec,
    x_parts: Vec<PartStream>,
    y_parts: Vec<PartStream>,
    h_dw: Conv,
    h_bn: Norm,
    h_pw: Conv,
}

impl OfdBlock {
    pub fn new(prefix: &str, c_in: usize, spec: &OfdBlockSpec) -> Result<Self> {
        spec.check().map_err(|reason| Error::Validation {
            location: prefix.to_string(),
            reason,
        })?;
        let part = |tag: String| PartStream::new(join(prefix, &tag), c_in, spec.m, spec.k1);
        Ok(Self {
            spec: *spec,
            x_parts: (1..=spec.n).map(|k| part(format!("x{k}"))).collect(),
            y_parts: (1..spec.n).map(|k| part(format!("y{k}"))).collect(),
            h_dw: Conv::depthwise(join(prefix, "h_dw"), c_in, (1, spec.k2))
                .with_dilation(1, spec.dilation),
            h_bn: Norm::batch(join(prefix, "h_bn"), c_in),
            h_pw: Conv::pointwise(join(prefix, "h_pw"), c_in, spec.m).with_bias(),
        })
    }

    pub fn out_channels(&self) -> usize {
        self.spec.m
    }

    pub fn decls(&self, out: &mut Vec<ParamDecl>) {
        for p in self.x_parts.iter().chain(&self.y_parts) {
            p.decls(out);
        }
        self.h_dw.decls(out);
        self.h_bn.decls(out);
        self.h_pw.decls(out);
    }

    /// Split, per-part `f`, max-merge, crop back to the input height.
    pub fn stream1(&self, x: &Tensor4, w: &WeightStore, pass: &Pass) -> Result<Tensor4> {
        let split = ofd_split(x, self.spec.n)?;
        let fx = split
            .disjoint
            .iter()
            .zip(&self.x_parts)
            .map(|(part, f)| f.forward(part, w, pass))
            .collect::<Result<Vec<_>>>()?;
        let fy = split
            .overlapped
            .iter()
            .zip(&self.y_parts)
            .map(|(part, f)| f.forward(part, w, pass))
            .collect::<Result<Vec<_>>>()?;
        ofd_merge(&fx, &fy, split.s)?.slice_freq(0, x.freq())
    }

    pub fn stream2(&self, x: &Tensor4, w: &WeightStore, pass: &mut Pass) -> Result<Tensor4> {
        let h = self.h_dw.forward(&freq_avg(x), w)?;
        let h = swish(&self.h_bn.forward(&h, w, pass)?);
        let h = relu(&self.h_pw.forward(&h, w)?);
        let h = spatial_dropout(&h, self.spec.dropout, pass.rng, pass.training)?;
        broadcast_freq(&h, x.freq())
    }

    pub fn forward(&self, x: &Tensor4, w: &WeightStore, pass: &mut Pass) -> Result<Tensor4> {
        let s1 = self.stream1(x, w, pass)?;
        let s2 = self.stream2(x, w, pass)?;
        s1.add(&s2)
    }
}

pub fn ofd_block_forward(
    x: &Tensor4,
    spec: &OfdBlockSpec,
    prefix: &str,
    weights: &WeightStore,
    training: bool,
    rng: &mut dyn RngCore,
) -> Result<Tensor4> {
    let block = OfdBlock::new(prefix, x.channels(), spec)?;
    block.forward(x, weights, &mut Pass::new(training, rng))
}
