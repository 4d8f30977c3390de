//! Binary checkpoints.
//!
//! Layout (little-endian): 8-byte magic, `u32` version, `u64` header length,
//! JSON header, `u64` tensor count, then per tensor a `u32` name length, the
//! UTF-8 name, `u32` rank, `u64` dims, the values and the AdaGrad
//! accumulator as `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::params::validate_params;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::numkit::{ParamStore, Tensor};

pub const MAGIC: &[u8; 8] = b"NAGMCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    vocab: Vocabulary,
    /// Opaque training settings, kept so a run can be resumed or audited.
    train: serde_json::Value,
    iteration: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub vocab: Vocabulary,
    pub train: serde_json::Value,
    /// Completed iterations when the snapshot was taken.
    pub iteration: usize,
    pub params: ParamStore,
}

pub fn encode_checkpoint(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let header = serde_json::to_vec(&Header {
        model: ckpt.model.clone(),
        vocab: ckpt.vocab.clone(),
        train: ckpt.train.clone(),
        iteration: ckpt.iteration,
    })?;
    let mut out = Vec::with_capacity(header.len() + 8 * 2 * ckpt.params.num_values() + 64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(ckpt.params.len() as u64).to_le_bytes());
    for (name, value) in ckpt.params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(value.shape().len() as u32).to_le_bytes());
        for &d in value.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        let acc = ckpt.params.accumulator(name).expect("accumulator per tensor");
        for v in value.data().iter().chain(acc.data()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| format!("truncated at byte {} (wanted {n} more)", self.pos))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> std::result::Result<usize, String> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| format!("length {v} does not fit in memory"))
    }

    fn f64s(&mut self, n: usize) -> std::result::Result<Vec<f64>, String> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| format!("tensor of {n} values is too large"))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses checkpoint bytes. `path` is only used in error messages.
pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    let fail = |msg: String| Error::Checkpoint {
        path: path.to_path_buf(),
        msg,
    };
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).map_err(&fail)? != MAGIC {
        return Err(fail("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32().map_err(&fail)?;
    if version != FORMAT_VERSION {
        return Err(fail(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let header_len = r.len().map_err(&fail)?;
    let header: Header = serde_json::from_slice(r.take(header_len).map_err(&fail)?)
        .map_err(|e| fail(format!("bad header: {e}")))?;
    header.model.validate()?;
    if header.vocab.len() != header.model.vocab_size {
        return Err(fail(format!(
            "vocabulary has {} entries but the model expects {}",
            header.vocab.len(),
            header.model.vocab_size
        )));
    }

    let count = r.len().map_err(&fail)?;
    let mut params = ParamStore::new();
    for _ in 0..count {
        let name_len = r.u32().map_err(&fail)? as usize;
        let name = std::str::from_utf8(r.take(name_len).map_err(&fail)?)
            .map_err(|_| fail("tensor name is not UTF-8".into()))?
            .to_string();
        let rank = r.u32().map_err(&fail)? as usize;
        let shape = (0..rank)
            .map(|_| r.len())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(&fail)?;
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| fail(format!("tensor \"{name}\" is too large")))?;
        let value = r.f64s(n).map_err(&fail)?;
        let acc = r.f64s(n).map_err(&fail)?;
        let value =
            Tensor::new(shape.clone(), value).map_err(|e| fail(format!("tensor \"{name}\": {e}")))?;
        let acc = Tensor::new(shape.clone(), acc).map_err(|e| fail(format!("tensor \"{name}\": {e}")))?;
        if params.contains(&name) {
            return Err(fail(format!("duplicate tensor \"{name}\"")));
        }
        params.insert_with_accumulator(name, value, acc)?;
    }
    if r.pos != bytes.len() {
        return Err(fail(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    validate_params(&header.model, &params)?;
    Ok(Checkpoint {
        model: header.model,
        vocab: header.vocab,
        train: header.train,
        iteration: header.iteration,
        params,
    })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let bytes = encode_checkpoint(ckpt)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}
