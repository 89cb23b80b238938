//! Normalization of spectrogram tensors and their image renderings.
//!
//! Both consumers of a tensor, the classifier input and the PNG export, go
//! through [`normalize`] so they always see the same `[0, 1]` values.
//! Quantization to bytes uses round-half-up: `floor(v·255 + 0.5)`.

mod plot;
mod viridis;

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{SpectrogramMode, SpectrogramTensor};

pub use plot::{confusion_plot, roc_plot};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("png encoding failed: {0}")]
    Encoding(#[from] png::EncodingError),
    #[error("png decoding failed: {0}")]
    Decoding(#[from] png::DecodingError),
    #[error("unsupported image layout: {0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Normalization {
    /// min → 0, max → 1; constant tensors map to zeros.
    PerImageMinMax,
    /// Clamp to `[db_floor, db_ceil]` and map affinely onto `[0, 1]`.
    FixedRange { db_floor: f64, db_ceil: f64 },
    /// `FixedRange(max − range_db, max)` with `max` the tensor maximum.
    RelativeToMax { range_db: f64 },
}

/// Maps a tensor into `[0, 1]`. The returned tensor records the dB range
/// that was mapped in `db_floor`/`db_ceil`.
pub fn normalize(t: &SpectrogramTensor, mode: Normalization) -> SpectrogramTensor {
    let (lo, hi) = t.min_max();
    let (floor, ceil) = match mode {
        Normalization::PerImageMinMax => (lo, hi),
        Normalization::FixedRange { db_floor, db_ceil } => (db_floor, db_ceil),
        Normalization::RelativeToMax { range_db } => (hi - range_db, hi),
    };
    let span = ceil - floor;
    let data = if !(span > 0.0) || !span.is_finite() {
        match mode {
            Normalization::FixedRange { .. } => t
                .data
                .iter()
                .map(|&v| if v >= ceil { 1.0 } else { 0.0 })
                .collect(),
            _ => vec![0.0; t.data.len()],
        }
    } else {
        t.data
            .iter()
            .map(|&v| ((v.clamp(floor, ceil) - floor) / span).clamp(0.0, 1.0))
            .collect()
    };
    SpectrogramTensor {
        data,
        db_floor: floor,
        db_ceil: ceil,
        ..t.clone()
    }
}

/// Normalizes each channel independently.
pub fn normalize_per_channel(t: &SpectrogramTensor, mode: Normalization) -> SpectrogramTensor {
    let mut data = Vec::with_capacity(t.data.len());
    for c in 0..t.channels {
        let single = SpectrogramTensor {
            data: t.plane(c).to_vec(),
            channels: 1,
            ..t.clone()
        };
        data.extend(normalize(&single, mode).data);
    }
    SpectrogramTensor {
        data,
        db_floor: 0.0,
        db_ceil: 1.0,
        ..t.clone()
    }
}

/// Round-half-up byte quantization of a `[0, 1]` value.
#[inline]
pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor().min(255.0) as u8
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Colormap {
    pub name: String,
    pub table: Vec<[u8; 3]>,
}

impl Colormap {
    /// Perceptually uniform default map, non-decreasing in luminance.
    pub fn viridis() -> Self {
        Self {
            name: "viridis".into(),
            table: viridis::VIRIDIS.to_vec(),
        }
    }

    pub fn gray() -> Self {
        Self {
            name: "gray".into(),
            table: (0..=255u8).map(|v| [v, v, v]).collect(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "viridis" => Some(Self::viridis()),
            "gray" | "grey" => Some(Self::gray()),
            _ => None,
        }
    }

    #[inline]
    pub fn lookup(&self, v: f64) -> [u8; 3] {
        self.table[quantize(v) as usize]
    }
}

/// Rec. 709 relative luminance of an 8-bit RGB triple.
pub fn luminance(rgb: [u8; 3]) -> f64 {
    0.2126 * rgb[0] as f64 + 0.7152 * rgb[1] as f64 + 0.0722 * rgb[2] as f64
}

/// 8-bit image, row-major, interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectrogramImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
    pub colormap_name: Option<String>,
    pub mode: Option<SpectrogramMode>,
}

impl SpectrogramImage {
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.pixels[i..i + self.channels]
    }
}

/// Image row `y` shows tensor row `rows − 1 − y`: low frequencies at the bottom.
fn flipped_rows(rows: usize) -> impl Iterator<Item = usize> {
    (0..rows).rev()
}

/// Colormaps a `[0, 1]` plane (`rows × frames`, row-major) to RGB.
pub fn apply_colormap(
    plane: &[f64],
    rows: usize,
    frames: usize,
    colormap: &Colormap,
) -> SpectrogramImage {
    let mut pixels = Vec::with_capacity(rows * frames * 3);
    for r in flipped_rows(rows) {
        for t in 0..frames {
            pixels.extend_from_slice(&colormap.lookup(plane[r * frames + t]));
        }
    }
    SpectrogramImage {
        width: frames,
        height: rows,
        channels: 3,
        pixels,
        colormap_name: Some(colormap.name.clone()),
        mode: None,
    }
}

/// Renders a normalized tensor without a colormap: one channel per tensor
/// channel (1 → grayscale, 3 → RGB with channel `k` in colour slot `k`).
pub fn render_channels(t: &SpectrogramTensor) -> Result<SpectrogramImage, RenderError> {
    if t.channels != 1 && t.channels != 3 {
        return Err(RenderError::Unsupported(format!("{} channels", t.channels)));
    }
    let mut pixels = Vec::with_capacity(t.data.len());
    for r in flipped_rows(t.rows) {
        for f in 0..t.frames {
            for c in 0..t.channels {
                pixels.push(quantize(t.get(c, r, f)));
            }
        }
    }
    Ok(SpectrogramImage {
        width: t.frames,
        height: t.rows,
        channels: t.channels,
        pixels,
        colormap_name: None,
        mode: Some(t.mode),
    })
}

/// Renders a normalized single-channel tensor through a colormap.
pub fn render_colormapped(t: &SpectrogramTensor, colormap: &Colormap) -> SpectrogramImage {
    let mut img = apply_colormap(t.plane(0), t.rows, t.frames, colormap);
    img.mode = Some(t.mode);
    img
}

/// Float RGB planes (`3 × rows × frames`) of a colormapped single-channel
/// tensor, each value the table entry divided by 255. Used as classifier
/// input so it matches the exported PNG exactly.
pub fn colormap_planes(t: &SpectrogramTensor, colormap: &Colormap) -> Vec<f64> {
    let n = t.rows * t.frames;
    let mut out = vec![0.0; 3 * n];
    for (i, &v) in t.plane(0).iter().enumerate() {
        let rgb = colormap.lookup(v);
        for c in 0..3 {
            out[c * n + i] = rgb[c] as f64 / 255.0;
        }
    }
    out
}

/// `{clip_id}_{start_ms}_{mode}.png`
pub fn image_file_name(clip_id: &str, start_time_s: f64, mode: &str) -> String {
    format!(
        "{clip_id}_{}_{mode}.png",
        (start_time_s * 1000.0).round() as u64
    )
}

/// Writes an 8-bit non-interlaced PNG with optional `tEXt` metadata.
pub fn export_png(
    img: &SpectrogramImage,
    path: &Path,
    text: &[(&str, &str)],
) -> Result<(), RenderError> {
    let color = match img.channels {
        1 => png::ColorType::Grayscale,
        3 => png::ColorType::Rgb,
        n => return Err(RenderError::Unsupported(format!("{n} channels"))),
    };
    let file = File::create(path)?;
    let mut enc = png::Encoder::new(BufWriter::new(file), img.width as u32, img.height as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    for (k, v) in text {
        enc.add_text_chunk((*k).to_string(), (*v).to_string())?;
    }
    let mut writer = enc.write_header()?;
    writer.write_image_data(&img.pixels)?;
    writer.finish()?;
    Ok(())
}

/// Reads an 8-bit grayscale or RGB PNG.
pub fn import_png(path: &Path) -> Result<SpectrogramImage, RenderError> {
    let decoder = png::Decoder::new(io::BufReader::new(File::open(path)?));
    let mut reader = decoder.read_info()?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf)?;
    let channels = match (info.color_type, info.bit_depth) {
        (png::ColorType::Grayscale, png::BitDepth::Eight) => 1,
        (png::ColorType::Rgb, png::BitDepth::Eight) => 3,
        other => return Err(RenderError::Unsupported(format!("{other:?}"))),
    };
    buf.truncate(info.buffer_size());
    Ok(SpectrogramImage {
        width: info.width as usize,
        height: info.height as usize,
        channels,
        pixels: buf,
        colormap_name: None,
        mode: None,
    })
}
