//! Named `f32` parameter container and its on-disk format.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! b"NNWSTORE"            8-byte magic
//! version: u32           currently 1
//! index_len: u64         byte length of the JSON index
//! index: [u8; index_len] JSON array of {name, dtype, shape, offset}
//! payload                raw little-endian f32 values
//! ```
//!
//! `offset` is in bytes from the start of the payload. Entries are stored in
//! name order, so saving the same store twice gives identical bytes.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"NNWSTORE";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightEntry {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightStore {
    entries: BTreeMap<String, WeightEntry>,
}

#[derive(Serialize, Deserialize)]
struct IndexEntry {
    name: String,
    dtype: String,
    shape: Vec<usize>,
    offset: u64,
}

impl WeightStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn insert(&mut self, name: impl Into<String>, shape: Vec<usize>, data: Vec<f32>) -> Result<()> {
        let name = name.into();
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::dim(format!(
                "{name}: shape {shape:?} does not hold {} values",
                data.len()
            )));
        }
        if self.entries.contains_key(&name) {
            return Err(Error::config(format!("duplicate weight name {name}")));
        }
        self.entries.insert(name, WeightEntry { shape, data });
        Ok(())
    }

    /// Replaces the values of an existing entry, keeping its shape.
    pub fn set(&mut self, name: &str, data: Vec<f32>) -> Result<()> {
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| Error::config(format!("no weight named {name}")))?;
        if entry.data.len() != data.len() {
            return Err(Error::dim(format!(
                "{name}: expected {} values, got {}",
                entry.data.len(),
                data.len()
            )));
        }
        entry.data = data;
        Ok(())
    }

    pub fn entry(&self, name: &str) -> Result<&WeightEntry> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::config(format!("missing weight {name}")))
    }

    /// Values of `name`, which must have exactly `shape`.
    pub fn get(&self, name: &str, shape: &[usize]) -> Result<&[f32]> {
        let e = self.entry(name)?;
        if e.shape != shape {
            return Err(Error::dim(format!(
                "{name}: stored shape {:?}, expected {shape:?}",
                e.shape
            )));
        }
        Ok(&e.data)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut offset = 0u64;
        let index: Vec<IndexEntry> = self
            .entries
            .iter()
            .map(|(name, e)| {
                let ie = IndexEntry {
                    name: name.clone(),
                    dtype: "f32".into(),
                    shape: e.shape.clone(),
                    offset,
                };
                offset += 4 * e.data.len() as u64;
                ie
            })
            .collect();
        let json = serde_json::to_vec(&index)?;
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(json.len() as u64).to_le_bytes())?;
        w.write_all(&json)?;
        for e in self.entries.values() {
            let mut buf = Vec::with_capacity(4 * e.data.len());
            for v in &e.data {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |msg: String| Error::Format(format!("weight file: {msg}"));
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(fail("bad magic".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Unsupported(format!("weight file version {version}")));
        }
        let index_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let payload_start = 20usize
            .checked_add(index_len)
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| fail("index runs past end of file".into()))?;
        let index: Vec<IndexEntry> = serde_json::from_slice(&bytes[20..payload_start])
            .map_err(|e| fail(format!("index: {e}")))?;
        let payload = &bytes[payload_start..];

        let mut store = Self::new();
        for ie in index {
            if ie.dtype != "f32" {
                return Err(fail(format!("entry {}: dtype {} unsupported", ie.name, ie.dtype)));
            }
            let count: usize = ie.shape.iter().product();
            let start = ie.offset as usize;
            let end = start
                .checked_add(4 * count)
                .filter(|&e| e <= payload.len())
                .ok_or_else(|| fail(format!("entry {}: payload truncated", ie.name)))?;
            let data = payload[start..end]
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect();
            store
                .insert(ie.name.clone(), ie.shape, data)
                .map_err(|e| fail(format!("entry {}: {e}", ie.name)))?;
        }
        Ok(store)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// How a parameter is initialized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamInit {
    /// `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`.
    FanInUniform { fan_in: usize },
    Zeros,
    Ones,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: ParamInit,
}

impl ParamDecl {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, init: ParamInit) -> Self {
        Self {
            name: name.into(),
            shape,
            init,
        }
    }
}

/// Fills every declared parameter, drawing in declaration order from a
/// ChaCha8 stream seeded with `seed`.
pub fn init_params(decls: &[ParamDecl], seed: u64) -> Result<WeightStore> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = WeightStore::new();
    for d in decls {
        let count: usize = d.shape.iter().product();
        let data = match d.init {
            ParamInit::Zeros => vec![0.0; count],
            ParamInit::Ones => vec![1.0; count],
            ParamInit::FanInUniform { fan_in } => {
                let bound = (6.0 / fan_in.max(1) as f64).sqrt();
                (0..count)
                    .map(|_| rng.random_range(-bound..=bound) as f32)
                    .collect()
            }
        };
        store.insert(d.name.clone(), d.shape.clone(), data)?;
    }
    Ok(store)
}

/// Checks that `store` holds every declared parameter with the right shape.
pub fn check_params(decls: &[ParamDecl], store: &WeightStore) -> Result<()> {
    for d in decls {
        store.get(&d.name, &d.shape)?;
    }
    Ok(())
}
