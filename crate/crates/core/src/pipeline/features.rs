//! Segment → classifier input, with a content-addressed disk cache.
//!
//! Inputs are rounded through f32 whether computed or loaded, so a cache hit
//! yields exactly the values a fresh computation would.

use std::fs;
use std::path::{Path, PathBuf};

use log::debug;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::{FeatureConfig, PipelineError, PreprocMode};
use crate::render::{colormap_planes, normalize, normalize_per_channel, Colormap};
use crate::stft_mel::{mel_mono3, mel_single};
use crate::superlet::superlet_transform;
use crate::tensor::{SpectrogramMode, SpectrogramTensor};

/// One segment's classifier input with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFeature {
    pub participant_id: String,
    pub clip_id: String,
    pub start_time: f64,
    /// Class index: `Label::index()` for the binary task.
    pub label: usize,
    pub input: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    /// `[channels, rows, frames]`
    pub shape: [usize; 3],
    pub items: Vec<SegmentFeature>,
}

/// Computes the `3 × rows × frames` input of one segment. Colormapped modes
/// carry RGB values divided by 255, so quantizing them reproduces the PNG.
pub fn segment_input(
    samples: &[f64],
    sample_rate: u32,
    mode: PreprocMode,
    fc: &FeatureConfig,
) -> Result<SpectrogramTensor, PipelineError> {
    let fs = sample_rate as f64;
    let cmap = || {
        Colormap::by_name(&fc.colormap)
            .ok_or_else(|| PipelineError::Config(format!("features.colormap: {:?}", fc.colormap)))
    };
    let rgb = |t: &SpectrogramTensor, mode| -> Result<SpectrogramTensor, PipelineError> {
        let n = normalize(t, fc.normalization);
        Ok(SpectrogramTensor {
            data: colormap_planes(&n, &cmap()?),
            channels: 3,
            rows: n.rows,
            frames: n.frames,
            mode,
            db_floor: 0.0,
            db_ceil: 1.0,
        })
    };
    let mut t = match mode {
        PreprocMode::MelRgb => rgb(
            &mel_single(samples, fc.mel_rgb, &fc.mel, fs)?,
            SpectrogramMode::MelSingle,
        )?,
        PreprocMode::MelMono3 => normalize_per_channel(
            &mel_mono3(samples, fc.mel_mono3, &fc.mel, fs)?,
            fc.normalization,
        ),
        PreprocMode::Superlet => rgb(
            &superlet_transform(samples, &fc.superlet_for(fs), fs)?,
            SpectrogramMode::Superlet,
        )?,
    };
    for v in &mut t.data {
        *v = *v as f32 as f64;
    }
    Ok(t)
}

/// SHA-256 over the feature settings for `mode`, the sample rate and the
/// raw samples.
pub fn feature_cache_key(
    samples: &[f64],
    sample_rate: u32,
    settings: &serde_json::Value,
) -> String {
    let mut h = Sha256::new();
    h.update(settings.to_string().as_bytes());
    h.update(sample_rate.to_le_bytes());
    for s in samples {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn encode(t: &SpectrogramTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * t.data.len());
    for d in t.shape() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for &v in &t.data {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn decode(bytes: &[u8], mode: SpectrogramMode) -> Option<SpectrogramTensor> {
    let word = |i: usize| {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| [b[0], b[1], b[2], b[3]])
    };
    let [c, r, f] = [0, 1, 2].map(|i| word(i).map_or(0, |w| u32::from_le_bytes(w) as usize));
    let n = c * r * f;
    if n == 0 || bytes.len() != 12 + 4 * n {
        return None;
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    Some(SpectrogramTensor {
        data,
        channels: c,
        rows: r,
        frames: f,
        mode,
        db_floor: 0.0,
        db_ceil: 1.0,
    })
}

fn tensor_mode(mode: PreprocMode) -> SpectrogramMode {
    match mode {
        PreprocMode::MelRgb => SpectrogramMode::MelSingle,
        PreprocMode::MelMono3 => SpectrogramMode::MelMono3,
        PreprocMode::Superlet => SpectrogramMode::Superlet,
    }
}

/// Cached [`segment_input`]. Corrupt or unreadable cache entries are
/// recomputed and overwritten.
pub(crate) fn cached_input(
    samples: &[f64],
    sample_rate: u32,
    mode: PreprocMode,
    fc: &FeatureConfig,
    cache: &Path,
) -> Result<SpectrogramTensor, PipelineError> {
    let settings = fc.slice(mode, sample_rate as f64);
    let key = feature_cache_key(samples, sample_rate, &settings);
    let path: PathBuf = cache.join(&key[..2]).join(format!("{key}.bin"));
    if let Ok(bytes) = fs::read(&path) {
        if let Some(t) = decode(&bytes, tensor_mode(mode)) {
            return Ok(t);
        }
        debug!("discarding unreadable cache entry {}", path.display());
    }
    let t = segment_input(samples, sample_rate, mode, fc)?;
    let dir = path.parent().expect("cache path has a parent");
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir.display(), e))?;
    // unique temp name per key; rename makes the entry appear atomically
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, encode(&t)).map_err(|e| PipelineError::io(tmp.display(), e))?;
    fs::rename(&tmp, &path).map_err(|e| PipelineError::io(path.display(), e))?;
    Ok(t)
}

/// A segment waiting for feature extraction.
pub(crate) struct PendingSegment {
    pub participant_id: String,
    pub clip_id: String,
    pub start_time: f64,
    pub label: usize,
    pub samples: Vec<f64>,
}

/// Extracts features for every segment in parallel, keeping input order.
/// All segments must produce the same shape.
pub(crate) fn extract(
    segments: Vec<PendingSegment>,
    sample_rate: u32,
    mode: PreprocMode,
    fc: &FeatureConfig,
    cache: &Path,
) -> Result<(FeatureSet, Vec<SpectrogramTensor>), PipelineError> {
    let tensors: Vec<SpectrogramTensor> = segments
        .par_iter()
        .map(|s| cached_input(&s.samples, sample_rate, mode, fc, cache))
        .collect::<Result<_, _>>()?;
    let shape = tensors.first().map_or([0; 3], |t| t.shape());
    if let Some((s, t)) = segments
        .iter()
        .zip(&tensors)
        .find(|(_, t)| t.shape() != shape)
    {
        return Err(PipelineError::Data(format!(
            "features: segment {} at {} s has shape {:?}, expected {:?}",
            s.clip_id,
            s.start_time,
            t.shape(),
            shape
        )));
    }
    let items = segments
        .into_iter()
        .zip(&tensors)
        .map(|(s, t)| SegmentFeature {
            participant_id: s.participant_id,
            clip_id: s.clip_id,
            start_time: s.start_time,
            label: s.label,
            input: t.data.clone(),
        })
        .collect();
    Ok((FeatureSet { shape, items }, tensors))
}
