//! NPY v1.0 interchange for `f32` arrays (little-endian, C order).

use std::io::{Read, Write};
use std::path::Path;

use npyz::WriterBuilder;

use crate::error::{Error, Result};
use crate::features::Spectrogram;

pub fn write_f32<W: Write>(writer: W, data: &[f32], shape: &[usize]) -> Result<()> {
    let expected: usize = shape.iter().product();
    if expected != data.len() {
        return Err(Error::dim(format!(
            "shape {shape:?} holds {expected} values, got {}",
            data.len()
        )));
    }
    let shape: Vec<u64> = shape.iter().map(|&d| d as u64).collect();
    let mut w = npyz::WriteOptions::new()
        .default_dtype()
        .shape(&shape)
        .writer(writer)
        .begin_nd()?;
    w.extend(data.iter().copied())?;
    w.finish()?;
    Ok(())
}

pub fn read_f32<R: Read>(reader: R) -> Result<(Vec<f32>, Vec<usize>)> {
    let npy = npyz::NpyFile::new(reader).map_err(|e| Error::Format(format!("npy header: {e}")))?;
    if npy.order() != npyz::Order::C {
        return Err(Error::Unsupported("Fortran-order arrays".into()));
    }
    let shape: Vec<usize> = npy.shape().iter().map(|&d| d as usize).collect();
    let data = npy
        .into_vec::<f32>()
        .map_err(|e| Error::Format(format!("npy payload: {e}")))?;
    Ok((data, shape))
}

pub fn to_bytes(data: &[f32], shape: &[usize]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_f32(&mut buf, data, shape)?;
    Ok(buf)
}

pub fn spectrogram_to_bytes(spec: &Spectrogram) -> Result<Vec<u8>> {
    to_bytes(spec.data(), &spec.shape())
}

pub fn spectrogram_from_bytes(bytes: &[u8]) -> Result<Spectrogram> {
    let (data, shape) = read_f32(bytes)?;
    match shape[..] {
        [f, t] => Spectrogram::new(data, f, t),
        _ => Err(Error::dim(format!("expected a 2-D array, got shape {shape:?}"))),
    }
}

pub fn load_spectrogram(path: impl AsRef<Path>) -> Result<Spectrogram> {
    spectrogram_from_bytes(&std::fs::read(path)?)
}
