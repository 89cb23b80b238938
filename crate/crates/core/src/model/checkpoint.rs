//! Checkpoint layout:
//!
//! ```text
//! b"SPECPIPE" | u32 LE version | u32 LE metadata length | metadata JSON |
//! f32 LE parameters, block by block in layout order
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{param_layout, ModelConfig, ModelError, ModelParams, ParamBlock};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SPECPIPE";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config_hash: Option<String>,
    pub seed: u64,
    pub stage_index: usize,
    pub model: ModelConfig,
    pub n_classes: usize,
    pub blocks: Vec<ParamBlock>,
}

fn corrupt(msg: impl Into<String>) -> ModelError {
    ModelError::Checkpoint(msg.into())
}

pub fn encode_checkpoint(
    p: &ModelParams,
    config_hash: Option<&str>,
    stage_index: usize,
) -> Vec<u8> {
    let meta = CheckpointMeta {
        config_hash: config_hash.map(str::to_owned),
        seed: p.seed,
        stage_index,
        model: p.config.clone(),
        n_classes: p.n_classes,
        blocks: p.blocks.clone(),
    };
    let json = serde_json::to_vec(&meta).expect("metadata serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 4 * p.values.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for &v in &p.values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(ModelParams, CheckpointMeta), ModelError> {
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(corrupt("missing magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let json = bytes
        .get(16..16 + len)
        .ok_or_else(|| corrupt("truncated metadata"))?;
    let meta: CheckpointMeta =
        serde_json::from_slice(json).map_err(|e| corrupt(format!("metadata: {e}")))?;
    if meta.blocks != param_layout(&meta.model, meta.n_classes) {
        return Err(corrupt("block layout does not match model configuration"));
    }
    let n: usize = meta.blocks.iter().map(ParamBlock::len).sum();
    let body = &bytes[16 + len..];
    if body.len() != 4 * n {
        return Err(corrupt(format!(
            "expected {} parameter bytes, found {}",
            4 * n,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    let params = ModelParams {
        config: meta.model.clone(),
        n_classes: meta.n_classes,
        blocks: meta.blocks.clone(),
        values,
        seed: meta.seed,
    };
    Ok((params, meta))
}

pub fn save_checkpoint(
    p: &ModelParams,
    path: &Path,
    config_hash: Option<&str>,
    stage_index: usize,
) -> Result<(), ModelError> {
    fs::write(path, encode_checkpoint(p, config_hash, stage_index))
        .map_err(|e| corrupt(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, CheckpointMeta), ModelError> {
    let bytes = fs::read(path).map_err(|e| corrupt(format!("{}: {e}", path.display())))?;
    decode_checkpoint(&bytes)
}
