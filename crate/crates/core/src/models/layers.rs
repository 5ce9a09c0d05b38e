//! Named layers that read their parameters from a [`WeightStore`].

use rand::RngCore;

use super::weights::{ParamDecl, ParamInit, WeightStore};
use crate::error::Result;
use crate::nn::{
    batch_norm, conv2d, linear, same_padding, subspectral_norm, ConvParams, Matrix, NormMode,
    NormParams, Tensor4, DEFAULT_EPS,
};

/// Per-call forward state.
pub struct Pass<'a> {
    pub training: bool,
    pub rng: &'a mut dyn RngCore,
}

impl<'a> Pass<'a> {
    pub fn new(training: bool, rng: &'a mut dyn RngCore) -> Self {
        Self { training, rng }
    }

    pub fn norm_mode(&self) -> NormMode {
        if self.training {
            NormMode::Batch
        } else {
            NormMode::Running
        }
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Convolution with same padding at the configured dilation.
#[derive(Debug, Clone)]
pub(crate) struct Conv {
    pub name: String,
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub dilation: (usize, usize),
    pub groups: usize,
    pub bias: bool,
}

impl Conv {
    pub fn new(name: String, c_in: usize, c_out: usize, kernel: (usize, usize)) -> Self {
        Self {
            name,
            c_in,
            c_out,
            kernel,
            stride: (1, 1),
            dilation: (1, 1),
            groups: 1,
            bias: false,
        }
    }

    pub fn pointwise(name: String, c_in: usize, c_out: usize) -> Self {
        Self::new(name, c_in, c_out, (1, 1))
    }

    pub fn depthwise(name: String, channels: usize, kernel: (usize, usize)) -> Self {
        Self {
            groups: channels,
            ..Self::new(name, channels, channels, kernel)
        }
    }

    pub fn with_bias(mut self) -> Self {
        self.bias = true;
        self
    }

    pub fn with_stride(mut self, f: usize, t: usize) -> Self {
        self.stride = (f, t);
        self
    }

    pub fn with_dilation(mut self, f: usize, t: usize) -> Self {
        self.dilation = (f, t);
        self
    }

    fn weight_shape(&self) -> [usize; 4] {
        [self.c_out, self.c_in / self.groups, self.kernel.0, self.kernel.1]
    }

    pub fn decls(&self, out: &mut Vec<ParamDecl>) {
        let ws = self.weight_shape();
        let fan_in = ws[1] * ws[2] * ws[3];
        out.push(ParamDecl::new(
            join(&self.name, "weight"),
            ws.to_vec(),
            ParamInit::FanInUniform { fan_in },
        ));
        if self.bias {
            out.push(ParamDecl::new(join(&self.name, "bias"), vec![self.c_out], ParamInit::Zeros));
        }
    }

    pub fn forward(&self, x: &Tensor4, w: &WeightStore) -> Result<Tensor4> {
        let ws = self.weight_shape();
        let weight = w.get(&join(&self.name, "weight"), &ws)?;
        let mut p = ConvParams::new(weight, ws)
            .stride(self.stride.0, self.stride.1)
            .dilation(self.dilation.0, self.dilation.1)
            .groups(self.groups)
            .padding(
                same_padding(self.kernel.0, self.dilation.0)?,
                same_padding(self.kernel.1, self.dilation.1)?,
            );
        if self.bias {
            p = p.bias(w.get(&join(&self.name, "bias"), &[self.c_out])?);
        }
        conv2d(x, &p)
    }
}

/// Batch norm (`subbands == 1`) or sub-spectral norm.
#[derive(Debug, Clone)]
pub(crate) struct Norm {
    pub name: String,
    pub channels: usize,
    pub subbands: usize,
}

impl Norm {
    pub fn batch(name: String, channels: usize) -> Self {
        Self {
            name,
            channels,
            subbands: 1,
        }
    }

    pub fn subspectral(name: String, channels: usize, subbands: usize) -> Self {
        Self {
            name,
            channels,
            subbands,
        }
    }

    fn size(&self) -> usize {
        self.channels * self.subbands
    }

    pub fn decls(&self, out: &mut Vec<ParamDecl>) {
        let s = vec![self.size()];
        for (field, init) in [
            ("gamma", ParamInit::Ones),
            ("beta", ParamInit::Zeros),
            ("running_mean", ParamInit::Zeros),
            ("running_var", ParamInit::Ones),
        ] {
            out.push(ParamDecl::new(join(&self.name, field), s.clone(), init));
        }
    }

    pub fn forward(&self, x: &Tensor4, w: &WeightStore, pass: &Pass) -> Result<Tensor4> {
        let s = [self.size()];
        let p = NormParams {
            gamma: w.get(&join(&self.name, "gamma"), &s)?,
            beta: w.get(&join(&self.name, "beta"), &s)?,
            running_mean: w.get(&join(&self.name, "running_mean"), &s)?,
            running_var: w.get(&join(&self.name, "running_var"), &s)?,
            eps: DEFAULT_EPS,
            mode: pass.norm_mode(),
        };
        if self.subbands == 1 {
            batch_norm(x, &p)
        } else {
            subspectral_norm(x, self.subbands, &p)
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Linear {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
}

impl Linear {
    pub fn decls(&self, out: &mut Vec<ParamDecl>) {
        out.push(ParamDecl::new(
            join(&self.name, "weight"),
            vec![self.outputs, self.inputs],
            ParamInit::FanInUniform {
                fan_in: self.inputs,
            },
        ));
        out.push(ParamDecl::new(join(&self.name, "bias"), vec![self.outputs], ParamInit::Zeros));
    }

    pub fn forward(&self, x: &Matrix, w: &WeightStore) -> Result<Matrix> {
        let weight = w.get(&join(&self.name, "weight"), &[self.outputs, self.inputs])?;
        let bias = w.get(&join(&self.name, "bias"), &[self.outputs])?;
        linear(x, weight, bias, self.outputs)
    }
}
