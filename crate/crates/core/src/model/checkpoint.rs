//! Checkpoint file format.
//!
//! Byte layout, in order:
//!
//! 1. The ASCII line `charprobe-checkpoint 1\n` (format name and version).
//! 2. Header length `N` as an unsigned 64-bit little-endian integer.
//! 3. `N` bytes of UTF-8 JSON:
//!    `{"config": ModelConfig, "meta": {string: string}, "tensors": [{"name", "shape"}]}`.
//!    The config carries the charset and every attribute tagset.
//! 4. For each entry of `tensors`, in order, `product(shape)` row-major
//!    IEEE-754 `f64` values, little-endian.
//!
//! Nothing follows the last tensor.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::ParamStore;
use super::tagger::Tagger;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: &str = "charprobe-checkpoint 1\n";

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    meta: BTreeMap<String, String>,
    tensors: Vec<TensorEntry>,
}

/// A trained tagger plus free-form string metadata (seed, epoch, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub tagger: Tagger,
    pub meta: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new(tagger: Tagger) -> Self {
        Checkpoint {
            tagger,
            meta: BTreeMap::new(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let params = self.tagger.params();
        let header = Header {
            config: self.tagger.config().clone(),
            meta: self.meta.clone(),
            tensors: params
                .iter()
                .map(|(name, t)| TensorEntry {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header)
            .map_err(|e| Error::Data(format!("cannot encode checkpoint header: {e}")))?;
        let mut out = Vec::with_capacity(64 + json.len() + 8 * params.total_size());
        out.extend_from_slice(CHECKPOINT_MAGIC.as_bytes());
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in params.iter() {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Data(format!("malformed checkpoint: {msg}"));
        let rest = bytes
            .strip_prefix(CHECKPOINT_MAGIC.as_bytes())
            .ok_or_else(|| bad("missing or unsupported version line"))?;
        if rest.len() < 8 {
            return Err(bad("truncated header length"));
        }
        let (len_bytes, rest) = rest.split_at(8);
        let len = u64::from_le_bytes(len_bytes.try_into().unwrap()) as usize;
        if rest.len() < len {
            return Err(bad("truncated header"));
        }
        let (json, mut payload) = rest.split_at(len);
        let header: Header =
            serde_json::from_slice(json).map_err(|e| bad(&format!("header: {e}")))?;
        let mut store = ParamStore::new();
        for entry in header.tensors {
            let numel: usize = entry.shape.iter().product();
            if payload.len() < numel * 8 {
                return Err(bad(&format!("tensor {} is truncated", entry.name)));
            }
            let (chunk, tail) = payload.split_at(numel * 8);
            let data = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            store.push(entry.name, Tensor::new(entry.shape, data)?);
            payload = tail;
        }
        if !payload.is_empty() {
            return Err(bad("trailing bytes after the last tensor"));
        }
        let tagger = Tagger::from_parts(header.config, store)?;
        Ok(Checkpoint {
            tagger,
            meta: header.meta,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
