//! Channel × row × frame spectrogram tensors and their binary dump format.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Which preprocessing path produced a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrogramMode {
    /// Three log-mel planes computed with different FFT settings.
    MelMono3,
    /// A single log-mel plane (rendered to RGB through a colormap).
    MelSingle,
    /// Fractional adaptive superlet scalogram.
    Superlet,
}

impl SpectrogramMode {
    pub fn tag(self) -> &'static str {
        match self {
            SpectrogramMode::MelMono3 => "mel_mono3",
            SpectrogramMode::MelSingle => "mel_single",
            SpectrogramMode::Superlet => "superlet",
        }
    }
}

/// Dense `channels × rows × frames` array of reals.
///
/// Rows are frequency bins ordered from low to high frequency. `db_floor`
/// and `db_ceil` record the value range the tensor was clamped to (for
/// log-domain tensors) or mapped from (for normalized tensors).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramTensor {
    pub data: Vec<f64>,
    pub channels: usize,
    pub rows: usize,
    pub frames: usize,
    pub mode: SpectrogramMode,
    pub db_floor: f64,
    pub db_ceil: f64,
}

impl SpectrogramTensor {
    /// Builds a tensor from a list of equally shaped planes (row-major,
    /// `rows × frames` each). `db_ceil` is set to the maximum value.
    pub fn from_planes(
        planes: Vec<Vec<f64>>,
        rows: usize,
        frames: usize,
        mode: SpectrogramMode,
        db_floor: f64,
    ) -> Self {
        let channels = planes.len();
        let mut data = Vec::with_capacity(channels * rows * frames);
        for p in planes {
            assert_eq!(p.len(), rows * frames, "plane shape mismatch");
            data.extend(p);
        }
        let db_ceil = data.iter().copied().fold(db_floor, f64::max);
        Self {
            data,
            channels,
            rows,
            frames,
            mode,
            db_floor,
            db_ceil,
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.rows, self.frames]
    }

    #[inline]
    pub fn get(&self, c: usize, r: usize, t: usize) -> f64 {
        self.data[(c * self.rows + r) * self.frames + t]
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.rows * self.frames;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// JSON sidecar written next to a tensor dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSidecar {
    pub mode: SpectrogramMode,
    /// `[channels, rows, frames]`
    pub shape: [usize; 3],
    pub settings: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Writes `stem.f32` (little-endian 32-bit floats, channel-major) and
/// `stem.json`. Returns the two paths.
pub fn write_tensor_dump(
    tensor: &SpectrogramTensor,
    stem: &Path,
    settings: serde_json::Value,
    config_hash: Option<&str>,
) -> io::Result<(PathBuf, PathBuf)> {
    let bin = stem.with_extension("f32");
    let json = stem.with_extension("json");
    let mut bytes = Vec::with_capacity(tensor.data.len() * 4);
    for &v in &tensor.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(&bin, bytes)?;
    let sidecar = TensorSidecar {
        mode: tensor.mode,
        shape: tensor.shape(),
        settings,
        config_hash: config_hash.map(str::to_owned),
    };
    fs::write(&json, serde_json::to_vec_pretty(&sidecar)?)?;
    Ok((bin, json))
}

/// Reads a dump written by [`write_tensor_dump`].
pub fn read_tensor_dump(stem: &Path) -> io::Result<(SpectrogramTensor, TensorSidecar)> {
    let sidecar: TensorSidecar = serde_json::from_slice(&fs::read(stem.with_extension("json"))?)?;
    let bytes = fs::read(stem.with_extension("f32"))?;
    let [c, r, t] = sidecar.shape;
    if bytes.len() != c * r * t * 4 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("expected {} bytes, found {}", c * r * t * 4, bytes.len()),
        ));
    }
    let data: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    let (lo, hi) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let tensor = SpectrogramTensor {
        data,
        channels: c,
        rows: r,
        frames: t,
        mode: sidecar.mode,
        db_floor: lo,
        db_ceil: hi,
    };
    Ok((tensor, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        let t = SpectrogramTensor::from_planes(
            vec![vec![0.5, -1.25, 3.0, 7.0], vec![1.0, 2.0, 3.0, 4.0]],
            2,
            2,
            SpectrogramMode::MelMono3,
            -1.25,
        );
        let stem = dir.path().join("x");
        write_tensor_dump(&t, &stem, serde_json::json!({"n_mels": 2}), Some("abc")).unwrap();
        let (back, side) = read_tensor_dump(&stem).unwrap();
        assert_eq!(back.data, t.data);
        assert_eq!(side.shape, [2, 2, 2]);
        assert_eq!(side.config_hash.as_deref(), Some("abc"));
    }
}
