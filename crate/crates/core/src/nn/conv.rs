use super::Tensor4;
use crate::error::{Error, Result};

/// Borrowed convolution weights plus geometry.
///
/// `weight` is `[C_out, C_in / groups, k_f, k_t]`. Padding is zeros.
#[derive(Debug, Clone, Copy)]
pub struct ConvParams<'a> {
    pub weight: &'a [f32],
    pub weight_shape: [usize; 4],
    pub bias: Option<&'a [f32]>,
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    pub dilation: (usize, usize),
    pub groups: usize,
}

impl<'a> ConvParams<'a> {
    pub fn new(weight: &'a [f32], weight_shape: [usize; 4]) -> Self {
        Self {
            weight,
            weight_shape,
            bias: None,
            stride: (1, 1),
            padding: (0, 0),
            dilation: (1, 1),
            groups: 1,
        }
    }

    pub fn bias(mut self, bias: &'a [f32]) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn stride(mut self, f: usize, t: usize) -> Self {
        self.stride = (f, t);
        self
    }

    pub fn padding(mut self, f: usize, t: usize) -> Self {
        self.padding = (f, t);
        self
    }

    pub fn dilation(mut self, f: usize, t: usize) -> Self {
        self.dilation = (f, t);
        self
    }

    pub fn groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }

    /// Zero padding that keeps both axes the same size at stride 1.
    pub fn same(self) -> Result<Self> {
        let [_, _, kf, kt] = self.weight_shape;
        let pf = same_padding(kf, self.dilation.0)?;
        let pt = same_padding(kt, self.dilation.1)?;
        Ok(self.padding(pf, pt))
    }

    pub fn out_channels(&self) -> usize {
        self.weight_shape[0]
    }

    /// `floor((L + 2p - d (k - 1) - 1) / s) + 1` per axis.
    pub fn output_dims(&self, f: usize, t: usize) -> Result<(usize, usize)> {
        let [_, _, kf, kt] = self.weight_shape;
        let dim = |len: usize, k: usize, s: usize, p: usize, d: usize| {
            let span = d * (k - 1) + 1;
            let padded = len + 2 * p;
            if padded < span {
                None
            } else {
                Some((padded - span) / s + 1)
            }
        };
        match (
            dim(f, kf, self.stride.0, self.padding.0, self.dilation.0),
            dim(t, kt, self.stride.1, self.padding.1, self.dilation.1),
        ) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::dim(format!(
                "kernel {kf}x{kt} (dilation {:?}) does not fit input {f}x{t} with padding {:?}",
                self.dilation, self.padding
            ))),
        }
    }

    fn check(&self, c_in: usize) -> Result<()> {
        let [c_out, c_in_g, kf, kt] = self.weight_shape;
        let g = self.groups;
        if g == 0 || c_in % g != 0 || c_out % g != 0 {
            return Err(Error::dim(format!(
                "groups {g} must divide C_in {c_in} and C_out {c_out}"
            )));
        }
        if c_in_g != c_in / g {
            return Err(Error::dim(format!(
                "weight expects {c_in_g} input channels per group, input has {}",
                c_in / g
            )));
        }
        if kf == 0 || kt == 0 {
            return Err(Error::dim("kernel dims must be at least 1"));
        }
        if self.stride.0 == 0 || self.stride.1 == 0 || self.dilation.0 == 0 || self.dilation.1 == 0
        {
            return Err(Error::dim("stride and dilation must be at least 1"));
        }
        if self.weight.len() != c_out * c_in_g * kf * kt {
            return Err(Error::dim(format!(
                "weight buffer has {} values, shape {:?}",
                self.weight.len(),
                self.weight_shape
            )));
        }
        if let Some(b) = self.bias {
            if b.len() != c_out {
                return Err(Error::dim(format!("bias has {} values, C_out {c_out}", b.len())));
            }
        }
        Ok(())
    }
}

/// Same-size padding for an odd kernel: `dilation * (k - 1) / 2`.
pub fn same_padding(kernel: usize, dilation: usize) -> Result<usize> {
    if kernel % 2 == 0 {
        return Err(Error::config(format!(
            "same padding needs an odd kernel, got {kernel}"
        )));
    }
    Ok(dilation * (kernel - 1) / 2)
}

/// Output positions `o` in `0..out_len` whose input index
/// `o * stride + offset` lands inside `0..in_len`.
#[inline]
fn valid_range(offset: isize, stride: usize, in_len: usize, out_len: usize) -> (usize, usize) {
    let s = stride as isize;
    let lo = if offset >= 0 { 0 } else { ((-offset) + s - 1) / s };
    let hi = if offset >= in_len as isize {
        0
    } else {
        ((in_len as isize - 1 - offset) / s + 1).min(out_len as isize)
    };
    (lo.max(0) as usize, hi.max(lo) as usize)
}

/// Grouped 2-D cross-correlation with zero padding.
pub fn conv2d(x: &Tensor4, p: &ConvParams) -> Result<Tensor4> {
    let [n_batch, c_in, f_in, t_in] = x.shape();
    p.check(c_in)?;
    let [c_out, c_in_g, kf, kt] = p.weight_shape;
    let (f_out, t_out) = p.output_dims(f_in, t_in)?;
    let (sf, st) = p.stride;
    let (df, dt) = p.dilation;
    let (pf, pt) = p.padding;
    let c_out_g = c_out / p.groups;

    let mut out = Tensor4::zeros([n_batch, c_out, f_out, t_out]);
    let mut acc = vec![0f64; f_out * t_out];
    let src = x.data();
    for n in 0..n_batch {
        for oc in 0..c_out {
            let g = oc / c_out_g;
            acc.fill(p.bias.map_or(0.0, |b| b[oc] as f64));
            for icg in 0..c_in_g {
                let ic = g * c_in_g + icg;
                let plane = &src[x.offset(n, ic, 0, 0)..x.offset(n, ic, 0, 0) + f_in * t_in];
                for i in 0..kf {
                    let f_off = (i * df) as isize - pf as isize;
                    let (of_lo, of_hi) = valid_range(f_off, sf, f_in, f_out);
                    for j in 0..kt {
                        let w = p.weight[((oc * c_in_g + icg) * kf + i) * kt + j] as f64;
                        let t_off = (j * dt) as isize - pt as isize;
                        let (ot_lo, ot_hi) = valid_range(t_off, st, t_in, t_out);
                        for of in of_lo..of_hi {
                            let fi = (of * sf) as isize + f_off;
                            let row = &plane[fi as usize * t_in..(fi as usize + 1) * t_in];
                            let dst = &mut acc[of * t_out..(of + 1) * t_out];
                            if ot_lo >= ot_hi {
                                continue;
                            }
                            let ti_lo = ((ot_lo * st) as isize + t_off) as usize;
                            if st == 1 {
                                let src_row = &row[ti_lo..ti_lo + (ot_hi - ot_lo)];
                                for (d, &v) in dst[ot_lo..ot_hi].iter_mut().zip(src_row) {
                                    *d += w * v as f64;
                                }
                            } else {
                                for (k, d) in dst[ot_lo..ot_hi].iter_mut().enumerate() {
                                    *d += w * row[ti_lo + k * st] as f64;
                                }
                            }
                        }
                    }
                }
            }
            let base = out.offset(n, oc, 0, 0);
            for (o, &a) in out.data_mut()[base..base + f_out * t_out].iter_mut().zip(&acc) {
                *o = a as f32;
            }
        }
    }
    Ok(out)
}

/// Convolution with `groups == C_in`; each channel is filtered on its own.
pub fn depthwise_conv(x: &Tensor4, p: &ConvParams) -> Result<Tensor4> {
    if p.groups != x.channels() || p.weight_shape[1] != 1 {
        return Err(Error::dim(format!(
            "depthwise conv needs groups = C_in = {} and one input channel per group, got groups {} and weight {:?}",
            x.channels(),
            p.groups,
            p.weight_shape
        )));
    }
    conv2d(x, p)
}

/// 1x1 convolution: a per-position channel-mixing matrix.
pub fn pointwise_conv(x: &Tensor4, p: &ConvParams) -> Result<Tensor4> {
    if p.weight_shape[2] != 1 || p.weight_shape[3] != 1 {
        return Err(Error::dim(format!(
            "pointwise conv needs a 1x1 kernel, got {:?}",
            p.weight_shape
        )));
    }
    conv2d(x, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Materializes the zero-padded input, then sums every tap.
    fn oracle(x: &Tensor4, p: &ConvParams) -> Tensor4 {
        let [n, c_in, f, t] = x.shape();
        let [c_out, c_in_g, kf, kt] = p.weight_shape;
        let (pf, pt) = p.padding;
        let padded = Tensor4::from_fn([n, c_in, f + 2 * pf, t + 2 * pt], |[a, b, i, j]| {
            if i < pf || j < pt || i - pf >= f || j - pt >= t {
                0.0
            } else {
                x.at(a, b, i - pf, j - pt)
            }
        });
        let (fo, to) = p.output_dims(f, t).unwrap();
        let c_out_g = c_out / p.groups;
        Tensor4::from_fn([n, c_out, fo, to], |[a, oc, i, j]| {
            let g = oc / c_out_g;
            let mut s = p.bias.map_or(0.0, |b| b[oc] as f64);
            for icg in 0..c_in_g {
                for u in 0..kf {
                    for v in 0..kt {
                        let w = p.weight[((oc * c_in_g + icg) * kf + u) * kt + v] as f64;
                        let xv = padded.at(
                            a,
                            g * c_in_g + icg,
                            i * p.stride.0 + u * p.dilation.0,
                            j * p.stride.1 + v * p.dilation.1,
                        );
                        s += w * xv as f64;
                    }
                }
            }
            s as f32
        })
    }

    fn random(shape: [usize; 4], rng: &mut ChaCha8Rng) -> Tensor4 {
        Tensor4::from_fn(shape, |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn identity_kernel() {
        let x = Tensor4::from_fn([2, 1, 3, 4], |[n, _, f, t]| (n * 12 + f * 4 + t) as f32);
        let w = [1.0];
        let y = conv2d(&x, &ConvParams::new(&w, [1, 1, 1, 1]).bias(&[0.0])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn diagonal_kernel_sums() {
        let x = Tensor4::new(vec![1.0, 2.0, 3.0, 4.0], [1, 1, 2, 2]).unwrap();
        let w = [1.0, 0.0, 0.0, 1.0];
        let y = conv2d(&x, &ConvParams::new(&w, [1, 1, 2, 2])).unwrap();
        assert_eq!(y.shape(), [1, 1, 1, 1]);
        assert_eq!(y.data(), &[5.0]);
    }

    #[test]
    fn random_case_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random([1, 3, 5, 7], &mut rng);
        let w: Vec<f32> = (0..4 * 3 * 3 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = [0.1, -0.2, 0.3, 0.0];
        let p = ConvParams::new(&w, [4, 3, 3, 3]).bias(&b).padding(1, 1);
        let got = conv2d(&x, &p).unwrap();
        assert!(got.max_abs_diff(&oracle(&x, &p)) <= 1e-5);
    }

    #[test]
    fn geometry_sweep_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..150 {
            let groups = [1, 2][rng.random_range(0..2)];
            let c_in = groups * rng.random_range(1..=2);
            let c_out = groups * rng.random_range(1..=2);
            let (kf, kt) = (rng.random_range(1..=3), rng.random_range(1..=3));
            let p_tmp = (rng.random_range(0..=2), rng.random_range(0..=2));
            let x = random(
                [rng.random_range(1..=3), c_in, rng.random_range(3..=9), rng.random_range(3..=9)],
                &mut rng,
            );
            let w: Vec<f32> = (0..c_out * (c_in / groups) * kf * kt)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let p = ConvParams::new(&w, [c_out, c_in / groups, kf, kt])
                .groups(groups)
                .stride(rng.random_range(1..=3), rng.random_range(1..=3))
                .dilation(rng.random_range(1..=2), rng.random_range(1..=2))
                .padding(p_tmp.0, p_tmp.1);
            let Ok((fo, to)) = p.output_dims(x.freq(), x.time()) else {
                continue;
            };
            let got = conv2d(&x, &p).unwrap();
            assert_eq!(got.shape(), [x.batch(), c_out, fo, to]);
            assert!(got.max_abs_diff(&oracle(&x, &p)) <= 1e-5);
        }
    }

    #[test]
    fn depthwise_channels_are_isolated() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random([1, 2, 6, 6], &mut rng);
        let w: Vec<f32> = (0..2 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = ConvParams::new(&w, [2, 1, 3, 1]).groups(2).same().unwrap();
        let y = depthwise_conv(&x, &p).unwrap();
        assert_eq!(y.shape(), [1, 2, 6, 6]);

        let mut x2 = x.clone();
        for v in &mut x2.data_mut()[..36] {
            *v += 5.0;
        }
        let y2 = depthwise_conv(&x2, &p).unwrap();
        assert_eq!(y.plane(0, 1), y2.plane(0, 1));
        assert_ne!(y.plane(0, 0), y2.plane(0, 0));
        assert!(y.max_abs_diff(&oracle(&x, &p)) <= 1e-5);
    }

    #[test]
    fn depthwise_rejects_dense_weights() {
        let x = Tensor4::zeros([1, 2, 3, 3]);
        let w = [0.0; 4];
        assert!(depthwise_conv(&x, &ConvParams::new(&w, [2, 2, 1, 1])).is_err());
    }

    #[test]
    fn pointwise_is_matrix_vector_product() {
        // constant input channels [1, 2, 3]
        let x = Tensor4::from_fn([1, 3, 4, 5], |[_, c, _, _]| (c + 1) as f32);
        let m = [1.0, 0.0, -1.0, 0.5, 0.5, 0.5];
        let y = pointwise_conv(&x, &ConvParams::new(&m, [2, 3, 1, 1])).unwrap();
        assert_eq!(y.shape(), [1, 2, 4, 5]);
        assert!(y.plane(0, 0).iter().all(|&v| v == -2.0));
        assert!(y.plane(0, 1).iter().all(|&v| v == 3.0));

        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(pointwise_conv(&x, &ConvParams::new(&id, [3, 3, 1, 1])).unwrap(), x);
        assert!(pointwise_conv(&x, &ConvParams::new(&[0.0; 27], [1, 3, 3, 3])).is_err());
    }

    #[test]
    fn same_padding_rules() {
        assert_eq!(same_padding(3, 1).unwrap(), 1);
        assert_eq!(same_padding(3, 4).unwrap(), 4);
        assert_eq!(same_padding(1, 4).unwrap(), 0);
        assert!(same_padding(2, 1).is_err());
    }

    #[test]
    fn incompatible_shapes() {
        let x = Tensor4::zeros([1, 3, 4, 4]);
        let w = [0.0; 8];
        assert!(conv2d(&x, &ConvParams::new(&w, [2, 2, 1, 2])).is_err());
        assert!(conv2d(&x, &ConvParams::new(&[0.0; 3 * 25], [1, 3, 5, 5])).is_err());
        assert!(conv2d(&x, &ConvParams::new(&[0.0; 6], [2, 1, 1, 1]).groups(2)).is_err());
    }
}
