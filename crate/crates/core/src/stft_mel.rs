//! STFT power spectrograms, HTK-style mel filterbanks and log-mel planes.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{SpectrogramMode, SpectrogramTensor};

/// Added to mel power before taking decibels.
pub const POWER_EPS: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum DspError {
    #[error("input has {n_samples} samples, need at least {needed}")]
    InputTooShort { n_samples: usize, needed: usize },
    #[error("n_fft {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("hop must be positive")]
    ZeroHop,
    #[error("invalid band: fmin {fmin} Hz, fmax {fmax} Hz, sample rate {sample_rate} Hz")]
    InvalidBand {
        fmin: f64,
        fmax: f64,
        sample_rate: f64,
    },
    #[error("need at least 2 mel bands, got {0}")]
    TooFewBands(usize),
    #[error("mel band {band} has no FFT bin inside its support")]
    DegenerateBand { band: usize },
    #[error(
        "filterbank built for n_fft {filterbank} applied to spectrogram with n_fft {spectrogram}"
    )]
    NfftMismatch {
        filterbank: usize,
        spectrogram: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Hann,
    Hamming,
}

impl WindowKind {
    /// Periodic window of length `n`.
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        let (a0, a1) = match self {
            WindowKind::Hann => (0.5, 0.5),
            WindowKind::Hamming => (0.54, 0.46),
        };
        (0..n)
            .map(|i| a0 - a1 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
            .collect()
    }
}

/// One-sided STFT: `n_frames × (n_fft/2 + 1)` complex bins, frame-major.
#[derive(Debug, Clone)]
pub struct ComplexSpectrogram {
    pub bins: Vec<Complex64>,
    pub n_fft: usize,
    pub hop: usize,
    pub n_frames: usize,
    pub window: WindowKind,
}

impl ComplexSpectrogram {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let nb = self.n_bins();
        &self.bins[t * nb..(t + 1) * nb]
    }

    /// `|X|²`, frame-major.
    pub fn power(&self) -> Vec<f64> {
        self.bins.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Number of frames produced without padding.
pub fn frame_count(n_samples: usize, n_fft: usize, hop: usize) -> usize {
    if n_samples < n_fft {
        0
    } else {
        1 + (n_samples - n_fft) / hop
    }
}

fn plan(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(n)
}

/// Short-time Fourier transform without padding. Frame `t` is the DFT of
/// `window ⊙ samples[t·hop .. t·hop + n_fft]`.
pub fn stft(
    samples: &[f64],
    n_fft: usize,
    hop: usize,
    window: WindowKind,
) -> Result<ComplexSpectrogram, DspError> {
    if !n_fft.is_power_of_two() {
        return Err(DspError::NotPowerOfTwo(n_fft));
    }
    if hop == 0 {
        return Err(DspError::ZeroHop);
    }
    if samples.len() < n_fft {
        return Err(DspError::InputTooShort {
            n_samples: samples.len(),
            needed: n_fft,
        });
    }
    let n_frames = frame_count(samples.len(), n_fft, hop);
    let n_bins = n_fft / 2 + 1;
    let w = window.coefficients(n_fft);
    let fft = plan(n_fft);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut bins = Vec::with_capacity(n_frames * n_bins);
    for t in 0..n_frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(samples[start + i] * w[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        bins.extend_from_slice(&buf[..n_bins]);
    }
    Ok(ComplexSpectrogram {
        bins,
        n_fft,
        hop,
        n_frames,
        window,
    })
}

/// HTK mel scale.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// `n_mels × (n_fft/2 + 1)` triangular filters with unit peak height.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterbankMatrix {
    pub weights: Vec<f64>,
    pub n_mels: usize,
    pub n_fft: usize,
    pub sample_rate: f64,
    pub fmin: f64,
    pub fmax: f64,
    /// `n_mels + 2` band edges in Hz.
    pub break_hz: Vec<f64>,
}

impl FilterbankMatrix {
    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nb = self.n_bins();
        &self.weights[i * nb..(i + 1) * nb]
    }

    /// Applies the filterbank to one power frame.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        (0..self.n_mels)
            .map(|i| self.row(i).iter().zip(power).map(|(w, p)| w * p).sum())
            .collect()
    }
}

/// Builds triangular filters whose `n_mels + 2` break frequencies are
/// uniformly spaced on the mel scale between `mel(fmin)` and `mel(fmax)`.
/// Row `i` rises from break `i` to a peak of 1 at break `i+1` and falls to
/// zero at break `i+2`, evaluated at the FFT bin frequencies.
///
/// A band whose support contains no FFT bin is rejected as degenerate.
pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: f64,
    fmin: f64,
    fmax: f64,
) -> Result<FilterbankMatrix, DspError> {
    if n_mels < 2 {
        return Err(DspError::TooFewBands(n_mels));
    }
    if !(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0) {
        return Err(DspError::InvalidBand {
            fmin,
            fmax,
            sample_rate,
        });
    }
    let (mlo, mhi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let n_breaks = n_mels + 2;
    let break_hz: Vec<f64> = (0..n_breaks)
        .map(|i| mel_to_hz(mlo + (mhi - mlo) * i as f64 / (n_breaks - 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let bin_hz: Vec<f64> = (0..n_bins)
        .map(|k| k as f64 * sample_rate / n_fft as f64)
        .collect();
    let mut weights = vec![0.0; n_mels * n_bins];
    for i in 0..n_mels {
        let (lo, mid, hi) = (break_hz[i], break_hz[i + 1], break_hz[i + 2]);
        let row = &mut weights[i * n_bins..(i + 1) * n_bins];
        for (w, &f) in row.iter_mut().zip(&bin_hz) {
            let rise = (f - lo) / (mid - lo);
            let fall = (hi - f) / (hi - mid);
            *w = rise.min(fall).max(0.0);
        }
        if row.iter().all(|&w| w == 0.0) {
            return Err(DspError::DegenerateBand { band: i });
        }
    }
    Ok(FilterbankMatrix {
        weights,
        n_mels,
        n_fft,
        sample_rate,
        fmin,
        fmax,
        break_hz,
    })
}

/// `10·log10(fb · |X|² + ε)` clamped below at `db_floor`, one channel.
pub fn log_mel(
    spec: &ComplexSpectrogram,
    fb: &FilterbankMatrix,
    db_floor: f64,
) -> Result<SpectrogramTensor, DspError> {
    if fb.n_fft != spec.n_fft {
        return Err(DspError::NfftMismatch {
            filterbank: fb.n_fft,
            spectrogram: spec.n_fft,
        });
    }
    let plane = log_mel_plane(spec, fb, db_floor);
    Ok(SpectrogramTensor::from_planes(
        vec![plane],
        fb.n_mels,
        spec.n_frames,
        SpectrogramMode::MelSingle,
        db_floor,
    ))
}

/// Row-major `n_mels × n_frames` plane.
fn log_mel_plane(spec: &ComplexSpectrogram, fb: &FilterbankMatrix, db_floor: f64) -> Vec<f64> {
    let n_frames = spec.n_frames;
    let mut plane = vec![0.0; fb.n_mels * n_frames];
    let mut power = vec![0.0; spec.n_bins()];
    for t in 0..n_frames {
        for (p, x) in power.iter_mut().zip(spec.frame(t)) {
            *p = x.norm_sqr();
        }
        for (m, v) in fb.apply(&power).into_iter().enumerate() {
            plane[m * n_frames + t] = (10.0 * (v + POWER_EPS).log10()).max(db_floor);
        }
    }
    plane
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FftSetting {
    pub n_fft: usize,
    pub hop: usize,
}

impl FftSetting {
    pub const fn new(n_fft: usize, hop: usize) -> Self {
        Self { n_fft, hop }
    }
}

/// Shared mel parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MelParams {
    pub n_mels: usize,
    pub fmin: f64,
    /// Defaults to the Nyquist frequency.
    pub fmax: Option<f64>,
    pub window: WindowKind,
    pub db_floor: f64,
}

impl Default for MelParams {
    fn default() -> Self {
        Self {
            n_mels: 128,
            fmin: 0.0,
            fmax: None,
            window: WindowKind::Hann,
            db_floor: 10.0 * POWER_EPS.log10(),
        }
    }
}

impl MelParams {
    pub fn fmax_for(&self, sample_rate: f64) -> f64 {
        self.fmax.unwrap_or(sample_rate / 2.0)
    }
}

/// Single-setting log-mel plane of a segment.
pub fn mel_single(
    samples: &[f64],
    setting: FftSetting,
    params: &MelParams,
    sample_rate: f64,
) -> Result<SpectrogramTensor, DspError> {
    let spec = stft(samples, setting.n_fft, setting.hop, params.window)?;
    let fb = mel_filterbank(
        params.n_mels,
        setting.n_fft,
        sample_rate,
        params.fmin,
        params.fmax_for(sample_rate),
    )?;
    log_mel(&spec, &fb, params.db_floor)
}

/// Linear interpolation of a `rows × src_frames` plane onto the frame
/// centers of another STFT grid. Frame `t` of a grid is centered at
/// `t·hop + n_fft/2`; positions outside the source grid clamp to its ends.
fn align_frames(
    plane: &[f64],
    rows: usize,
    src: FftSetting,
    src_frames: usize,
    dst: FftSetting,
    dst_frames: usize,
) -> Vec<f64> {
    if src == dst && src_frames == dst_frames {
        return plane.to_vec();
    }
    let mut out = vec![0.0; rows * dst_frames];
    for t in 0..dst_frames {
        let center = (t * dst.hop) as f64 + dst.n_fft as f64 / 2.0;
        let pos = ((center - src.n_fft as f64 / 2.0) / src.hop as f64)
            .clamp(0.0, (src_frames - 1) as f64);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(src_frames - 1);
        let frac = pos - i0 as f64;
        for r in 0..rows {
            let a = plane[r * src_frames + i0];
            let b = plane[r * src_frames + i1];
            out[r * dst_frames + t] = a + (b - a) * frac;
        }
    }
    out
}

/// Three log-mel planes with different FFT settings, time-aligned to the
/// middle setting's frame grid and stacked in configuration order.
pub fn mel_mono3(
    samples: &[f64],
    settings: [FftSetting; 3],
    params: &MelParams,
    sample_rate: f64,
) -> Result<SpectrogramTensor, DspError> {
    let needed = settings.iter().map(|s| s.n_fft).max().unwrap_or(0);
    if samples.len() < needed {
        return Err(DspError::InputTooShort {
            n_samples: samples.len(),
            needed,
        });
    }
    let mid = settings[1];
    let dst_frames = frame_count(samples.len(), mid.n_fft, mid.hop);
    let mut planes = Vec::with_capacity(3);
    for s in settings {
        let t = mel_single(samples, s, params, sample_rate)?;
        planes.push(align_frames(
            &t.data,
            params.n_mels,
            s,
            t.frames,
            mid,
            dst_frames,
        ));
    }
    Ok(SpectrogramTensor::from_planes(
        planes,
        params.n_mels,
        dst_frames,
        SpectrogramMode::MelMono3,
        params.db_floor,
    ))
}
