//! Forward-pass primitives over dense `[batch, channel, freq, time]` tensors.
//!
//! Values are stored as `f32`; convolutions and reductions accumulate in
//! `f64` with a fixed summation order per output element.

mod conv;
mod norm;
mod ops;
mod tensor;

pub use conv::{conv2d, depthwise_conv, pointwise_conv, same_padding, ConvParams};
pub use norm::{batch_norm, subspectral_norm, NormMode, NormParams, DEFAULT_EPS};
pub use ops::{
    broadcast_freq, freq_avg, global_avg_pool, linear, max_pool, max_pool2, mfm, relu,
    spatial_dropout, swish,
};
pub use tensor::{Matrix, Tensor4};
