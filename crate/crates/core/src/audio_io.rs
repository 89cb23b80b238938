//! WAV decoding, band-limited resampling and fixed-length segmentation.
//!
//! Segment defaults (3 s windows, 1.5 s hop, 16 kHz working rate) are
//! assumptions exposed through [`SegmentConfig`]; the recording protocol
//! uses 3 s sustained vowels so a 3 s window covers one phonation.

use std::f64::consts::PI;
use std::fs;
use std::io::{self, Cursor};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("truncated file")]
    TruncatedFile,
    #[error("malformed WAV: {0}")]
    Malformed(String),
    #[error("file contains zero samples")]
    ZeroSamples,
    #[error("invalid sample rate {0}")]
    InvalidRate(u32),
    #[error("invalid segmentation: window {window_s} s, hop {hop_s} s")]
    InvalidSegmentation { window_s: f64, hop_s: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Decoded mono waveform with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// Manifest clip id this audio came from, if any.
    pub clip_id: Option<String>,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
            clip_id: None,
        }
    }

    pub fn with_clip_id(mut self, id: impl Into<String>) -> Self {
        self.clip_id = Some(id.into());
        self
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

fn map_hound(e: hound::Error) -> AudioError {
    match e {
        // decoding reads from memory, so a failed read means missing bytes
        hound::Error::IoError(_) => AudioError::TruncatedFile,
        hound::Error::Unsupported => AudioError::UnsupportedEncoding("non-PCM format tag".into()),
        hound::Error::FormatError(m) if m.contains("unexpected eof") || m.contains("EOF") => {
            AudioError::TruncatedFile
        }
        hound::Error::FormatError(m) => AudioError::Malformed(m.into()),
        hound::Error::UnfinishedSample => AudioError::TruncatedFile,
        other => AudioError::UnsupportedEncoding(other.to_string()),
    }
}

/// Decodes RIFF/WAVE bytes (16-bit PCM or 32-bit IEEE float, mono or
/// stereo). Integer samples are scaled by 1/32768; stereo is averaged.
pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 {
        return Err(AudioError::TruncatedFile);
    }
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(AudioError::UnsupportedEncoding(format!(
            "{} channels",
            spec.channels
        )));
    }
    if spec.sample_rate == 0 {
        return Err(AudioError::InvalidRate(0));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| (v as f64).clamp(-1.0, 1.0)))
            .collect::<Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "{fmt:?} {bits}-bit"
            )))
        }
    };
    let ch = spec.channels as usize;
    if !interleaved.len().is_multiple_of(ch) {
        return Err(AudioError::TruncatedFile);
    }
    let samples: Vec<f64> = if ch == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(2)
            .map(|f| 0.5 * (f[0] + f[1]))
            .collect()
    };
    if samples.is_empty() {
        return Err(AudioError::ZeroSamples);
    }
    Ok(AudioClip::new(samples, spec.sample_rate))
}

/// Reads and decodes a WAV file, tagging the clip with `clip_id`.
pub fn read_wav(path: &Path) -> Result<AudioClip, AudioError> {
    decode_wav(&fs::read(path)?)
}

/// Encodes a clip as 16-bit mono PCM (round to nearest, clamped).
pub fn encode_wav16(clip: &AudioClip) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::with_capacity(44 + clip.samples.len() * 2));
    {
        let mut w = hound::WavWriter::new(&mut cursor, spec).expect("in-memory WAV writer");
        for &s in &clip.samples {
            let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
            w.write_sample(q).expect("in-memory write");
        }
        w.finalize().expect("in-memory finalize");
    }
    cursor.into_inner()
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

const SINC_ZERO_CROSSINGS: f64 = 32.0;
const KAISER_BETA: f64 = 9.0;
const CUTOFF_MARGIN: f64 = 0.95;

/// Windowed-sinc resampler. Output length is `round(n · target / source)`;
/// the kernel is a Kaiser-windowed sinc whose cutoff sits at 95% of the
/// lower Nyquist frequency. Same-rate input is returned unchanged.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidRate(target_rate));
    }
    if clip.sample_rate == 0 {
        return Err(AudioError::InvalidRate(clip.sample_rate));
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }
    let src = clip.sample_rate as f64;
    let dst = target_rate as f64;
    let ratio = dst / src;
    let n_in = clip.samples.len();
    let n_out = (n_in as f64 * ratio).round() as usize;
    // cutoff in cycles per input sample, relative to input Nyquist
    let fc = ratio.min(1.0) * CUTOFF_MARGIN;
    let half_width = SINC_ZERO_CROSSINGS / fc;
    let i0_beta = bessel_i0(KAISER_BETA);
    let kernel = |t: f64| -> f64 {
        let u = t / half_width;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let w = bessel_i0(KAISER_BETA * (1.0 - u * u).sqrt()) / i0_beta;
        let x = fc * t;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            (PI * x).sin() / (PI * x)
        };
        fc * sinc * w
    };
    let mut out = Vec::with_capacity(n_out);
    for j in 0..n_out {
        let center = j as f64 / ratio;
        let lo = (center - half_width).ceil().max(0.0) as usize;
        let hi = ((center + half_width).floor() as isize).min(n_in as isize - 1);
        let mut acc = 0.0;
        if hi >= lo as isize {
            for i in lo..=hi as usize {
                acc += clip.samples[i] * kernel(center - i as f64);
            }
        }
        out.push(acc.clamp(-1.0, 1.0));
    }
    Ok(AudioClip {
        samples: out,
        sample_rate: target_rate,
        clip_id: clip.clip_id.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PadPolicy {
    /// Drop the incomplete tail window.
    #[default]
    DropTail,
    /// Emit one extra zero-padded window covering the tail.
    PadTail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentConfig {
    pub window_s: f64,
    pub hop_s: f64,
    pub pad_policy: PadPolicy,
    /// Working rate every clip is resampled to before segmentation.
    pub sample_rate: u32,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            window_s: 3.0,
            hop_s: 1.5,
            pad_policy: PadPolicy::DropTail,
            sample_rate: 16_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudioSegment {
    pub samples: Vec<f64>,
    pub start_time: f64,
    pub parent: Option<String>,
}

/// Cuts fixed-length windows starting at `0, hop, 2·hop, …`.
///
/// Window and hop lengths are rounded to whole samples. A clip shorter than
/// one window yields exactly one zero-padded segment under either policy.
pub fn segment(
    clip: &AudioClip,
    window_s: f64,
    hop_s: f64,
    pad_policy: PadPolicy,
) -> Result<Vec<AudioSegment>, AudioError> {
    if !(window_s > 0.0 && hop_s > 0.0 && hop_s <= window_s) {
        return Err(AudioError::InvalidSegmentation { window_s, hop_s });
    }
    let sr = clip.sample_rate as f64;
    let win = (window_s * sr).round() as usize;
    let hop = (hop_s * sr).round() as usize;
    if win == 0 || hop == 0 {
        return Err(AudioError::InvalidSegmentation { window_s, hop_s });
    }
    let n = clip.samples.len();
    let count = if n <= win {
        1
    } else {
        let full = (n - win) / hop + 1;
        let covered = (full - 1) * hop + win;
        match pad_policy {
            PadPolicy::PadTail if covered < n => full + 1,
            _ => full,
        }
    };
    let segs = (0..count)
        .map(|k| {
            let start = k * hop;
            let mut samples = vec![0.0; win];
            let end = (start + win).min(n);
            if start < end {
                samples[..end - start].copy_from_slice(&clip.samples[start..end]);
            }
            AudioSegment {
                samples,
                start_time: start as f64 / sr,
                parent: clip.clip_id.clone(),
            }
        })
        .collect();
    Ok(segs)
}

/// Sidecar for a raw segment dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSidecar {
    pub clip_id: String,
    pub start_time: f64,
    pub sample_rate: u32,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Writes `{clip_id}_{start_ms}.f32` (little-endian f32) plus a JSON sidecar.
pub fn write_segment_dump(
    seg: &AudioSegment,
    sample_rate: u32,
    dir: &Path,
    config_hash: Option<&str>,
) -> io::Result<PathBuf> {
    let clip_id = seg.parent.clone().unwrap_or_else(|| "clip".into());
    let start_ms = (seg.start_time * 1000.0).round() as u64;
    let stem = dir.join(format!("{clip_id}_{start_ms}"));
    let mut bytes = Vec::with_capacity(seg.samples.len() * 4);
    for &s in &seg.samples {
        bytes.extend_from_slice(&(s as f32).to_le_bytes());
    }
    let bin = stem.with_extension("f32");
    fs::write(&bin, bytes)?;
    let side = SegmentSidecar {
        clip_id,
        start_time: seg.start_time,
        sample_rate,
        n_samples: seg.samples.len(),
        config_hash: config_hash.map(str::to_owned),
    };
    fs::write(
        stem.with_extension("json"),
        serde_json::to_vec_pretty(&side)?,
    )?;
    Ok(bin)
}
