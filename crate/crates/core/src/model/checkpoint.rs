//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "G2TC" | u32 version | u32 header_len | header (key=value lines)
//! u32 tensor_count | per tensor: u32 name_len | name | u32 ndim | u64 dims.. | f32 data..
//! u64 vocab_len | vocabulary text
//! ```
//!
//! Optimizer moments are stored as ordinary tensors named `adam.m.<param>`
//! and `adam.v.<param>` after the parameters.

use std::collections::BTreeMap;
use std::path::Path;

use super::adam::AdamState;
use super::params::Parameters;
use super::tensor::Matrix;
use super::{parse_kv, ModelConfig};
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

pub const MAGIC: &[u8; 4] = b"G2TC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub params: Parameters<f32>,
    pub adam: Option<AdamState<f32>>,
    pub vocab: Option<Vocabulary>,
    /// Free-form run metadata, e.g. the epoch a checkpoint was taken at.
    pub meta: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn new(params: Parameters<f32>) -> Self {
        Checkpoint {
            params,
            adam: None,
            vocab: None,
            meta: BTreeMap::new(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut header = self.params.config.to_kv();
        header.push_str(&format!("has_adam={}\n", self.adam.is_some()));
        header.push_str(&format!("adam_step={}\n", self.adam.as_ref().map_or(0, |a| a.t)));
        for (k, v) in &self.meta {
            header.push_str(&format!("meta.{k}={v}\n"));
        }

        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());

        let mut tensors: Vec<(String, &Matrix<f32>)> = self
            .params
            .names
            .iter()
            .cloned()
            .zip(&self.params.tensors)
            .collect();
        if let Some(a) = &self.adam {
            for (name, m) in self.params.names.iter().zip(&a.m) {
                tensors.push((format!("adam.m.{name}"), m));
            }
            for (name, v) in self.params.names.iter().zip(&a.v) {
                tensors.push((format!("adam.v.{name}"), v));
            }
        }
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for (name, m) in tensors {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&2u32.to_le_bytes());
            out.extend_from_slice(&(m.rows as u64).to_le_bytes());
            out.extend_from_slice(&(m.cols as u64).to_le_bytes());
            for x in &m.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let vocab = self.vocab.as_ref().map(Vocabulary::to_text).unwrap_or_default();
        out.extend_from_slice(&(vocab.len() as u64).to_le_bytes());
        out.extend_from_slice(vocab.as_bytes());
        out
    }

    /// `path` only labels errors.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let err = |m: String| Error::checkpoint(path, m);
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4).map_err(&err)? != MAGIC {
            return Err(err("bad magic bytes".into()));
        }
        let version = r.u32().map_err(&err)?;
        if version != FORMAT_VERSION {
            return Err(err(format!("format version {version}, expected {FORMAT_VERSION}")));
        }
        let hlen = r.u32().map_err(&err)? as usize;
        let header = std::str::from_utf8(r.take(hlen).map_err(&err)?)
            .map_err(|_| err("header is not UTF-8".into()))?;
        let kv = parse_kv(header).map_err(|e| err(format!("header: {e}")))?;
        let config = ModelConfig::from_kv(&kv).map_err(|e| err(format!("header: {e}")))?;
        let has_adam = match kv.get("has_adam").map(String::as_str) {
            Some("true") => true,
            Some("false") => false,
            _ => return Err(err("header: bad `has_adam`".into())),
        };
        let adam_step: u64 = kv
            .get("adam_step")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("header: bad `adam_step`".into()))?;
        let meta = kv
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v.clone())))
            .collect();

        let count = r.u32().map_err(&err)? as usize;
        let mut named = Vec::with_capacity(count);
        for _ in 0..count {
            let nlen = r.u32().map_err(&err)? as usize;
            let name = String::from_utf8(r.take(nlen).map_err(&err)?.to_vec())
                .map_err(|_| err("tensor name is not UTF-8".into()))?;
            let ndim = r.u32().map_err(&err)?;
            if ndim != 2 {
                return Err(err(format!("`{name}` has {ndim} dimensions, expected 2")));
            }
            let rows = r.u64().map_err(&err)? as usize;
            let cols = r.u64().map_err(&err)? as usize;
            let n = rows
                .checked_mul(cols)
                .filter(|n| n.checked_mul(4).is_some_and(|b| b <= r.remaining()))
                .ok_or_else(|| err(format!("truncated data for `{name}`")))?;
            let raw = r.take(n * 4).map_err(&err)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            named.push((name, Matrix::from_vec(rows, cols, data)));
        }
        let vlen = r.u64().map_err(&err)? as usize;
        if vlen > r.remaining() {
            return Err(err("truncated vocabulary".into()));
        }
        let vtext = std::str::from_utf8(r.take(vlen).map_err(&err)?)
            .map_err(|_| err("vocabulary is not UTF-8".into()))?;
        if r.remaining() != 0 {
            return Err(err(format!("{} trailing bytes", r.remaining())));
        }
        let vocab = if vlen == 0 {
            None
        } else {
            Some(Vocabulary::from_text(vtext).map_err(|e| err(format!("vocabulary: {e}")))?)
        };

        let n_params = named.len() - if has_adam { 2 * (named.len() / 3) } else { 0 };
        if has_adam && named.len() % 3 != 0 {
            return Err(err("optimizer tensors do not match parameters".into()));
        }
        let mut rest = named.split_off(n_params);
        let params = Parameters::from_named(&config, named).map_err(|e| err(e.to_string()))?;
        let adam = if has_adam {
            let v_part = rest.split_off(n_params);
            let moments = |part: Vec<(String, Matrix<f32>)>, kind: &str| -> Result<Vec<Matrix<f32>>> {
                part.into_iter()
                    .zip(&params.names)
                    .map(|((name, m), pname)| {
                        let expected = format!("adam.{kind}.{pname}");
                        if name != expected {
                            return Err(err(format!("expected `{expected}`, found `{name}`")));
                        }
                        if m.shape() != params.get(pname).map(Matrix::shape).unwrap_or_default() {
                            return Err(err(format!("`{name}` shape mismatch")));
                        }
                        Ok(m)
                    })
                    .collect()
            };
            Some(AdamState {
                m: moments(rest, "m")?,
                v: moments(v_part, "v")?,
                t: adam_step,
            })
        } else {
            None
        };
        Ok(Checkpoint {
            params,
            adam,
            vocab,
            meta,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        if n > self.remaining() {
            return Err(format!("truncated at byte {}", self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(u64::from_le_bytes(a))
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    std::fs::write(path, checkpoint.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes, path)
}

/// Loads a checkpoint and requires its model configuration to equal `expected`.
pub fn load_checkpoint_expecting(path: &Path, expected: &ModelConfig) -> Result<Checkpoint> {
    let ckpt = load_checkpoint(path)?;
    if &ckpt.params.config != expected {
        return Err(Error::checkpoint(
            path,
            "model configuration differs from the expected one",
        ));
    }
    Ok(ckpt)
}
