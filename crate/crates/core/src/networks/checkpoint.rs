//! Checkpoint container.
//!
//! ```text
//! magic        4 bytes  "VACK"
//! version      u32 LE   = 1
//! header_len   u32 LE
//! header       header_len bytes of JSON: {version, arch, meta, dtype, tensors: [{name, shape, offset, len}]}
//! blob         concatenated little-endian tensor data (f32 or f64), offsets relative to blob start
//! ```
//!
//! Tensors named `buffer:<name>` are batch-norm running statistics.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use super::{ArchConfig, Model};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"VACK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub epoch: usize,
    pub step: usize,
    pub tau: f64,
    pub lr: f64,
    pub seed: u64,
    #[serde(default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    arch: ArchConfig,
    meta: CheckpointMeta,
    dtype: String,
    tensors: Vec<Entry>,
}

fn dtype_name(d: DType) -> Result<&'static str> {
    match d {
        DType::F32 => Ok("f32"),
        DType::F64 => Ok("f64"),
        other => Err(Error::Format(format!("unsupported checkpoint dtype {other:?}"))),
    }
}

fn encode(t: &Tensor, out: &mut Vec<u8>) -> Result<usize> {
    let start = out.len();
    match t.dtype() {
        DType::F32 => {
            for v in t.flatten_all()?.to_vec1::<f32>()? {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        DType::F64 => {
            for v in t.flatten_all()?.to_vec1::<f64>()? {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        other => return Err(Error::Format(format!("unsupported checkpoint dtype {other:?}"))),
    }
    Ok(out.len() - start)
}

fn decode(bytes: &[u8], shape: &[usize], dtype: DType, device: &Device) -> Result<Tensor> {
    let n: usize = shape.iter().product();
    let t = match dtype {
        DType::F32 => {
            if bytes.len() != 4 * n {
                return Err(Error::Format("tensor blob length mismatch".into()));
            }
            let mut v = vec![0f32; n];
            LittleEndian::read_f32_into(bytes, &mut v);
            Tensor::from_vec(v, shape, device)?
        }
        _ => {
            if bytes.len() != 8 * n {
                return Err(Error::Format("tensor blob length mismatch".into()));
            }
            let mut v = vec![0f64; n];
            LittleEndian::read_f64_into(bytes, &mut v);
            Tensor::from_vec(v, shape, device)?
        }
    };
    Ok(t)
}

pub fn save_checkpoint(model: &Model, meta: &CheckpointMeta, path: &Path) -> Result<()> {
    let mut blob = Vec::new();
    let mut tensors = Vec::new();
    let mut push = |name: String, t: &Tensor, blob: &mut Vec<u8>| -> Result<()> {
        let offset = blob.len();
        let len = encode(t, blob)?;
        tensors.push(Entry {
            name,
            shape: t.dims().to_vec(),
            offset,
            len,
        });
        Ok(())
    };
    for (name, var) in model.params().iter() {
        push(name.clone(), var.as_tensor(), &mut blob)?;
    }
    for (name, t) in model.buffers() {
        push(format!("buffer:{name}"), &t, &mut blob)?;
    }
    let header = Header {
        version: CHECKPOINT_VERSION,
        arch: model.cfg.clone(),
        meta: meta.clone(),
        dtype: dtype_name(model.dtype())?.into(),
        tensors,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(12 + json.len() + blob.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&blob);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path, device: &Device) -> Result<(Model, CheckpointMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 12 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!("{} is not a checkpoint", path.display())));
    }
    let version = LittleEndian::read_u32(&bytes[4..8]);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let hlen = LittleEndian::read_u32(&bytes[8..12]) as usize;
    let body = bytes
        .get(12..12 + hlen)
        .ok_or_else(|| Error::Format("truncated checkpoint header".into()))?;
    let header: Header = serde_json::from_slice(body)?;
    if header.version != CHECKPOINT_VERSION {
        return Err(Error::Version {
            found: header.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let dtype = match header.dtype.as_str() {
        "f32" => DType::F32,
        "f64" => DType::F64,
        other => return Err(Error::Format(format!("unknown dtype {other}"))),
    };
    let blob = &bytes[12 + hlen..];
    let model = Model::build(&header.arch, 0, dtype, device)?;
    let mut buffers = BTreeMap::new();
    let mut seen = 0usize;
    for e in &header.tensors {
        let raw = blob
            .get(e.offset..e.offset + e.len)
            .ok_or_else(|| Error::Format(format!("tensor {} lies outside the blob", e.name)))?;
        let t = decode(raw, &e.shape, dtype, device)?;
        if let Some(name) = e.name.strip_prefix("buffer:") {
            buffers.insert(name.to_string(), t);
            continue;
        }
        let var = model
            .params()
            .get(&e.name)
            .ok_or_else(|| Error::Format(format!("unexpected parameter {}", e.name)))?;
        if var.dims() != e.shape.as_slice() {
            return Err(Error::Format(format!("parameter {} has shape {:?}, expected {:?}", e.name, e.shape, var.dims())));
        }
        var.set(&t)?;
        seen += 1;
    }
    if seen != model.params().len() {
        return Err(Error::Format("checkpoint is missing parameters".into()));
    }
    model.load_buffers(&buffers)?;
    Ok((model, header.meta))
}
