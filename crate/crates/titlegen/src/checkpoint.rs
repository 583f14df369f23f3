//! Binary parameter container and its JSON sidecar.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "TGCK" | version u32 | count u32
//! count × ( name_len u32 | name utf-8 | rank u32 | dims u64 × rank | data f64 × numel )
//! ```

use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use titlegen_core::model::{Model, ModelConfig, TrainConfig};
use titlegen_core::tensor::{ParamStore, Tensor};

use crate::error::AppError;

const MAGIC: &[u8; 4] = b"TGCK";
pub const VERSION: u32 = 1;

pub fn encode(params: &ParamStore) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + params.numel() * 8);
    out.extend_from_slice(MAGIC);
    out.write_u32::<LE>(VERSION).unwrap();
    out.write_u32::<LE>(params.len() as u32).unwrap();
    for (name, t) in params.iter() {
        out.write_u32::<LE>(name.len() as u32).unwrap();
        out.extend_from_slice(name.as_bytes());
        out.write_u32::<LE>(t.dims().len() as u32).unwrap();
        for &d in t.dims() {
            out.write_u64::<LE>(d as u64).unwrap();
        }
        for &x in t.data() {
            out.write_f64::<LE>(x).unwrap();
        }
    }
    out
}

/// Named tensors in file order.
pub fn decode(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, String> {
    let mut r = Cursor::new(bytes);
    let eof = |_| "truncated file".to_string();
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(eof)?;
    if &magic != MAGIC {
        return Err("not a checkpoint".into());
    }
    let version = r.read_u32::<LE>().map_err(eof)?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let count = r.read_u32::<LE>().map_err(eof)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = r.read_u32::<LE>().map_err(eof)? as usize;
        let mut name = vec![0u8; len.min(bytes.len())];
        r.read_exact(&mut name).map_err(eof)?;
        let name = String::from_utf8(name).map_err(|_| "parameter name is not utf-8".to_string())?;
        let rank = r.read_u32::<LE>().map_err(eof)?;
        let mut dims = Vec::with_capacity(rank as usize);
        for _ in 0..rank {
            dims.push(r.read_u64::<LE>().map_err(eof)? as usize);
        }
        let numel = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or("shape overflows")?;
        let remaining = bytes.len() - r.position() as usize;
        if numel > remaining / 8 {
            return Err("truncated file".into());
        }
        let mut data = vec![0.0; numel];
        r.read_f64_into::<LE>(&mut data).map_err(eof)?;
        let t = Tensor::new(dims, data).map_err(|e| e.to_string())?;
        out.push((name, t));
    }
    if (r.position() as usize) != bytes.len() {
        return Err("trailing bytes after the last tensor".into());
    }
    Ok(out)
}

/// Sidecar describing how a checkpoint was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub vocab_sha256: String,
    pub steps: usize,
    /// Epoch whose parameters were kept, when chosen on validation loss.
    pub best_epoch: Option<usize>,
    pub best_val_loss: Option<f64>,
}

pub fn save(dir: &Path, stem: &str, params: &ParamStore, meta: &CheckpointMeta) -> Result<(), AppError> {
    crate::jsonl::write_bytes(&dir.join(format!("{stem}.ckpt")), &encode(params))?;
    crate::jsonl::write_json(&dir.join(format!("{stem}.json")), meta)
}

pub fn load(dir: &Path, stem: &str) -> Result<(Model, CheckpointMeta), AppError> {
    let meta_path = dir.join(format!("{stem}.json"));
    let meta: CheckpointMeta = crate::jsonl::read_json(&meta_path)?;
    let path = dir.join(format!("{stem}.ckpt"));
    let bytes = fs::read(&path).map_err(AppError::io(&path))?;
    let tensors = decode(&bytes).map_err(|r| AppError::format(&path, r))?;
    let model = Model::from_named_tensors(meta.model.clone(), tensors)?;
    Ok((model, meta))
}
