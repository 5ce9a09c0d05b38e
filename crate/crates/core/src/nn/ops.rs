use rand::Rng;

use super::{Matrix, Tensor4};
use crate::error::{Error, Result};

/// Max feature map: `out[c] = max(x[c], x[c + C/2])`.
pub fn mfm(x: &Tensor4) -> Result<Tensor4> {
    let [n, c, f, t] = x.shape();
    if c % 2 != 0 {
        return Err(Error::dim(format!("MFM needs an even channel count, got {c}")));
    }
    let half = c / 2;
    let mut out = Tensor4::zeros([n, half, f, t]);
    let plane = f * t;
    for i in 0..n {
        for j in 0..half {
            let a = x.plane(i, j);
            let b = x.plane(i, j + half);
            let dst = out.offset(i, j, 0, 0);
            for (k, o) in out.data_mut()[dst..dst + plane].iter_mut().enumerate() {
                *o = a[k].max(b[k]);
            }
        }
    }
    Ok(out)
}

pub fn relu(x: &Tensor4) -> Tensor4 {
    x.map(|v| v.max(0.0))
}

/// `x * sigmoid(x)`.
pub fn swish(x: &Tensor4) -> Tensor4 {
    x.map(|v| {
        let v = v as f64;
        (v / (1.0 + (-v).exp())) as f32
    })
}

/// Non-overlapping max pooling with window = stride = `(kf, kt)`; trailing
/// rows and columns that do not fill a window are dropped.
pub fn max_pool(x: &Tensor4, kf: usize, kt: usize) -> Result<Tensor4> {
    let [n, c, f, t] = x.shape();
    if kf == 0 || kt == 0 {
        return Err(Error::dim("pool window must be at least 1x1"));
    }
    let (fo, to) = (f / kf, t / kt);
    if fo == 0 || to == 0 {
        return Err(Error::dim(format!(
            "{kf}x{kt} pooling of a {f}x{t} map leaves nothing"
        )));
    }
    let mut out = Tensor4::zeros([n, c, fo, to]);
    for i in 0..n {
        for j in 0..c {
            let src = x.plane(i, j);
            for a in 0..fo {
                for b in 0..to {
                    let mut m = f32::NEG_INFINITY;
                    for u in 0..kf {
                        for v in 0..kt {
                            m = m.max(src[(a * kf + u) * t + b * kt + v]);
                        }
                    }
                    out.set(i, j, a, b, m);
                }
            }
        }
    }
    Ok(out)
}

pub fn max_pool2(x: &Tensor4) -> Result<Tensor4> {
    max_pool(x, 2, 2)
}

/// Mean over `(F, T)` per `(n, c)`.
pub fn global_avg_pool(x: &Tensor4) -> Matrix {
    let [n, c, f, t] = x.shape();
    let data = (0..n)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|(i, j)| {
            let s: f64 = x.plane(i, j).iter().map(|&v| v as f64).sum();
            (s / (f * t) as f64) as f32
        })
        .collect();
    Matrix::new(data, n, c).expect("n * c values")
}

/// Zeroes whole `(n, c)` feature maps with probability `rate` and scales
/// the survivors by `1 / (1 - rate)`. Identity when not training.
pub fn spatial_dropout<R: Rng + ?Sized>(
    x: &Tensor4,
    rate: f64,
    rng: &mut R,
    training: bool,
) -> Result<Tensor4> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let [n, c, f, t] = x.shape();
    let keep_scale = 1.0 / (1.0 - rate);
    let mut out = x.clone();
    let plane = f * t;
    for i in 0..n {
        for j in 0..c {
            let o = out.offset(i, j, 0, 0);
            let cell = &mut out.data_mut()[o..o + plane];
            if rng.random_bool(rate) {
                cell.fill(0.0);
            } else {
                for v in cell {
                    *v = (*v as f64 * keep_scale) as f32;
                }
            }
        }
    }
    Ok(out)
}

/// Mean over frequency: `[N, C, F, T] -> [N, C, 1, T]`.
pub fn freq_avg(x: &Tensor4) -> Tensor4 {
    let [n, c, f, t] = x.shape();
    let mut out = Tensor4::zeros([n, c, 1, t]);
    let mut acc = vec![0f64; t];
    for i in 0..n {
        for j in 0..c {
            acc.fill(0.0);
            for row in x.plane(i, j).chunks_exact(t) {
                for (a, &v) in acc.iter_mut().zip(row) {
                    *a += v as f64;
                }
            }
            for (k, a) in acc.iter().enumerate() {
                out.set(i, j, 0, k, (a / f as f64) as f32);
            }
        }
    }
    out
}

/// Repeats a `[N, C, 1, T]` map `freq` times along frequency.
pub fn broadcast_freq(x: &Tensor4, freq: usize) -> Result<Tensor4> {
    let [n, c, f, t] = x.shape();
    if f != 1 {
        return Err(Error::dim(format!("broadcast_freq needs F = 1, got {f}")));
    }
    let mut data = Vec::with_capacity(n * c * freq * t);
    for i in 0..n {
        for j in 0..c {
            let row = x.plane(i, j);
            for _ in 0..freq {
                data.extend_from_slice(row);
            }
        }
    }
    Tensor4::new(data, [n, c, freq, t])
}

/// `x W^T + b` with `W` shaped `[out, in]`.
pub fn linear(x: &Matrix, weight: &[f32], bias: &[f32], out_features: usize) -> Result<Matrix> {
    let in_features = x.cols();
    if weight.len() != out_features * in_features || bias.len() != out_features {
        return Err(Error::dim(format!(
            "linear {in_features}->{out_features}: weight {} values, bias {}",
            weight.len(),
            bias.len()
        )));
    }
    let mut data = Vec::with_capacity(x.rows() * out_features);
    for r in 0..x.rows() {
        let row = x.row(r);
        for o in 0..out_features {
            let w = &weight[o * in_features..(o + 1) * in_features];
            let s: f64 = bias[o] as f64
                + w.iter().zip(row).map(|(&a, &b)| a as f64 * b as f64).sum::<f64>();
            data.push(s as f32);
        }
    }
    Matrix::new(data, x.rows(), out_features)
}
