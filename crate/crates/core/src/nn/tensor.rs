use crate::error::{Error, Result};

/// Row-major rank-4 tensor, `[N, C, F, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    data: Vec<f32>,
    shape: [usize; 4],
}

impl Tensor4 {
    pub fn new(data: Vec<f32>, shape: [usize; 4]) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::dim(format!(
                "shape {shape:?} needs {len} values, got {}",
                data.len()
            )));
        }
        Ok(Self { data, shape })
    }

    pub fn zeros(shape: [usize; 4]) -> Self {
        Self::filled(shape, 0.0)
    }

    pub fn filled(shape: [usize; 4], value: f32) -> Self {
        Self {
            data: vec![value; shape.iter().product()],
            shape,
        }
    }

    pub fn from_fn(shape: [usize; 4], mut f: impl FnMut([usize; 4]) -> f32) -> Self {
        let [n, c, h, w] = shape;
        let mut data = Vec::with_capacity(n * c * h * w);
        for i in 0..n {
            for j in 0..c {
                for k in 0..h {
                    for l in 0..w {
                        data.push(f([i, j, k, l]));
                    }
                }
            }
        }
        Self { data, shape }
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn freq(&self) -> usize {
        self.shape[2]
    }

    pub fn time(&self) -> usize {
        self.shape[3]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn offset(&self, n: usize, c: usize, f: usize, t: usize) -> usize {
        ((n * self.shape[1] + c) * self.shape[2] + f) * self.shape[3] + t
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, f: usize, t: usize) -> f32 {
        self.data[self.offset(n, c, f, t)]
    }

    pub fn set(&mut self, n: usize, c: usize, f: usize, t: usize, v: f32) {
        let i = self.offset(n, c, f, t);
        self.data[i] = v;
    }

    /// Contiguous `[F, T]` plane of one `(n, c)` pair.
    pub fn plane(&self, n: usize, c: usize) -> &[f32] {
        let len = self.shape[2] * self.shape[3];
        let start = (n * self.shape[1] + c) * len;
        &self.data[start..start + len]
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            shape: self.shape,
        }
    }

    fn zip_with(&self, other: &Self, op: &str, f: impl Fn(f32, f32) -> f32) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::dim(format!(
                "{op}: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Self {
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            shape: self.shape,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn maximum(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "maximum", f32::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f32 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(if self.shape == other.shape { 0.0 } else { f32::INFINITY }, f32::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Rows `start..end` of the frequency axis.
    pub fn slice_freq(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.freq() {
            return Err(Error::dim(format!(
                "frequency slice {start}..{end} out of 0..{}",
                self.freq()
            )));
        }
        let [n, c, _, t] = self.shape;
        let mut data = Vec::with_capacity(n * c * (end - start) * t);
        for i in 0..n {
            for j in 0..c {
                let plane = self.plane(i, j);
                data.extend_from_slice(&plane[start * t..end * t]);
            }
        }
        Ok(Self {
            data,
            shape: [n, c, end - start, t],
        })
    }

    /// Appends zero rows along frequency up to `target` rows.
    pub fn pad_freq(&self, target: usize) -> Result<Self> {
        let [n, c, f, t] = self.shape;
        if target < f {
            return Err(Error::dim(format!("cannot pad {f} frequency rows down to {target}")));
        }
        if target == f {
            return Ok(self.clone());
        }
        let mut data = Vec::with_capacity(n * c * target * t);
        for i in 0..n {
            for j in 0..c {
                data.extend_from_slice(self.plane(i, j));
                data.resize(data.len() + (target - f) * t, 0.0);
            }
        }
        Ok(Self {
            data,
            shape: [n, c, target, t],
        })
    }

    /// Concatenates along frequency; all parts must agree on `N, C, T`.
    pub fn concat_freq(parts: &[Tensor4]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::dim("concat of zero tensors"))?;
        let [n, c, _, t] = first.shape;
        if let Some(bad) = parts
            .iter()
            .find(|p| p.batch() != n || p.channels() != c || p.time() != t)
        {
            return Err(Error::dim(format!(
                "concat_freq: {:?} vs {:?}",
                first.shape, bad.shape
            )));
        }
        let f_total: usize = parts.iter().map(|p| p.freq()).sum();
        let mut data = Vec::with_capacity(n * c * f_total * t);
        for i in 0..n {
            for j in 0..c {
                for p in parts {
                    data.extend_from_slice(p.plane(i, j));
                }
            }
        }
        Ok(Self {
            data,
            shape: [n, c, f_total, t],
        })
    }

    /// Stacks tensors along the batch axis.
    pub fn stack_batch(items: &[Tensor4]) -> Result<Self> {
        let first = items
            .first()
            .ok_or_else(|| Error::dim("stack of zero tensors"))?;
        let [_, c, f, t] = first.shape;
        let mut data = Vec::with_capacity(items.len() * first.data.len());
        let mut n = 0;
        for it in items {
            if it.shape[1..] != [c, f, t] {
                return Err(Error::dim(format!(
                    "stack_batch: {:?} vs {:?}",
                    first.shape, it.shape
                )));
            }
            data.extend_from_slice(&it.data);
            n += it.shape[0];
        }
        Ok(Self {
            data,
            shape: [n, c, f, t],
        })
    }
}

/// Row-major 2-D matrix, used for pooled features and logits.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    data: Vec<f32>,
    rows: usize,
    cols: usize,
}

impl Matrix {
    pub fn new(data: Vec<f32>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "matrix [{rows}, {cols}] needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> [usize; 2] {
        [self.rows, self.cols]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f32 {
        self.data[r * self.cols + c]
    }

    /// View as `[rows, cols, 1, 1]` so channel-wise primitives apply.
    pub fn into_tensor(self) -> Tensor4 {
        Tensor4 {
            shape: [self.rows, self.cols, 1, 1],
            data: self.data,
        }
    }

    pub fn from_tensor(t: Tensor4) -> Result<Self> {
        match t.shape {
            [n, c, 1, 1] => Ok(Self {
                data: t.data,
                rows: n,
                cols: c,
            }),
            s => Err(Error::dim(format!("expected [N, C, 1, 1], got {s:?}"))),
        }
    }
}
