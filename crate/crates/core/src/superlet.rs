//! Morlet wavelet responses and the fractional adaptive superlet transform.
//!
//! A superlet at centre frequency `f` is a set of Morlet wavelets sharing
//! `f` but with growing cycle counts. Their magnitude responses are combined
//! by a (weighted) geometric mean: short wavelets keep time resolution, long
//! ones sharpen frequency resolution, and the product keeps what they agree
//! on. The adaptive variant grows the order linearly with frequency; a
//! fractional order `k + α` includes the `(k+1)`-th wavelet with exponent α.
//!
//! Conventions (all configurable through [`SuperletConfig`]):
//! - Gaussian envelope standard deviation `σ_t = c / (k_sd · f)`, support
//!   truncated at ±3σ, wavelet scaled to unit L2 norm.
//! - Convolution runs through block FFTs (overlap-add) with zero padding,
//!   so the first and last half-support of every row is boundary-biased.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{SpectrogramMode, SpectrogramTensor};

/// Floor applied to magnitudes inside the geometric mean.
pub const GEOMEAN_EPS: f64 = 1e-12;
/// Support half-width in standard deviations.
pub const SUPPORT_SD: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum SuperletError {
    #[error("frequency {f} Hz outside (0, {nyquist}) Hz")]
    FrequencyOutOfRange { f: f64, nyquist: f64 },
    #[error("cycle count {0} must be at least 1")]
    InvalidCycles(f64),
    #[error("input has {n_samples} samples, longest wavelet needs {needed}")]
    InputTooShort { n_samples: usize, needed: usize },
    #[error("empty response list")]
    EmptyResponseList,
    #[error("order {order} needs {needed} responses, got {got}")]
    OrderMismatch {
        order: f64,
        needed: usize,
        got: usize,
    },
    #[error("response series have different lengths")]
    LengthMismatch,
    #[error("invalid superlet configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMode {
    /// Member `i` has `i · c1` cycles.
    #[default]
    Multiplicative,
    /// Member `i` has `c1 + (i − 1)` cycles.
    Additive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperletConfig {
    /// Centre frequencies in Hz, strictly ascending.
    pub freqs: Vec<f64>,
    pub base_cycles: f64,
    pub order_min: f64,
    pub order_max: f64,
    pub mode: CycleMode,
    pub k_sd: f64,
    /// Samples per output frame when pooling the response into a tensor.
    pub frame_len: usize,
    pub frame_hop: usize,
    pub db_floor: f64,
}

impl SuperletConfig {
    /// 64 log-spaced frequencies from 50 Hz to 90% of Nyquist, c1 = 3,
    /// orders 1..16, multiplicative, frames of 2048 samples every 512.
    pub fn default_for(sample_rate: f64) -> Self {
        Self {
            freqs: log_spaced(50.0, 0.9 * sample_rate / 2.0, 64),
            base_cycles: 3.0,
            order_min: 1.0,
            order_max: 16.0,
            mode: CycleMode::Multiplicative,
            k_sd: 5.0,
            frame_len: 2048,
            frame_hop: 512,
            db_floor: -100.0,
        }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<(), SuperletError> {
        let bad = |m: &str| Err(SuperletError::InvalidConfig(m.into()));
        if self.freqs.is_empty() {
            return bad("empty frequency grid");
        }
        if self.freqs.windows(2).any(|w| w[0] >= w[1]) {
            return bad("frequency grid must be strictly ascending");
        }
        let nyquist = sample_rate / 2.0;
        for &f in &self.freqs {
            if !(f > 0.0 && f < nyquist) {
                return Err(SuperletError::FrequencyOutOfRange { f, nyquist });
            }
        }
        if !(self.order_min >= 1.0 && self.order_min <= self.order_max) {
            return bad("need 1 <= order_min <= order_max");
        }
        if !(self.base_cycles >= 1.0) {
            return Err(SuperletError::InvalidCycles(self.base_cycles));
        }
        if !(self.k_sd > 0.0) {
            return bad("k_sd must be positive");
        }
        if self.frame_len == 0 || self.frame_hop == 0 {
            return bad("frame length and hop must be positive");
        }
        Ok(())
    }

    /// Adaptive order: linear in frequency from `order_min` at the lowest
    /// grid frequency to `order_max` at the highest.
    pub fn order_at(&self, f: f64) -> f64 {
        let (lo, hi) = (self.freqs[0], *self.freqs.last().expect("non-empty grid"));
        if hi <= lo {
            return self.order_min;
        }
        self.order_min + (self.order_max - self.order_min) * (f - lo) / (hi - lo)
    }

    /// Cycle counts of the `⌈order⌉` members.
    pub fn cycle_set(&self, order: f64) -> Vec<f64> {
        let n = order.ceil().max(1.0) as usize;
        (1..=n)
            .map(|i| match self.mode {
                CycleMode::Multiplicative => i as f64 * self.base_cycles,
                CycleMode::Additive => self.base_cycles + (i - 1) as f64,
            })
            .collect()
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Half-support of the sampled wavelet, in samples.
pub fn wavelet_half_len(f: f64, cycles: f64, fs: f64, k_sd: f64) -> usize {
    let sd = cycles / (k_sd * f);
    (SUPPORT_SD * sd * fs).ceil() as usize
}

/// Complex Morlet wavelet sampled at `t = n/fs`, `n ∈ [−M, M]`, with unit
/// L2 norm.
pub fn morlet_wavelet(f: f64, cycles: f64, fs: f64, k_sd: f64) -> Vec<Complex64> {
    let sd = cycles / (k_sd * f);
    let m = wavelet_half_len(f, cycles, fs, k_sd) as isize;
    let mut w: Vec<Complex64> = (-m..=m)
        .map(|n| {
            let t = n as f64 / fs;
            let g = (-0.5 * (t / sd).powi(2)).exp();
            Complex64::from_polar(g, 2.0 * PI * f * t)
        })
        .collect();
    let norm = w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut w {
        *c /= norm;
    }
    w
}

fn check_freq(f: f64, fs: f64) -> Result<(), SuperletError> {
    let nyquist = fs / 2.0;
    if !(f > 0.0 && f < nyquist) {
        return Err(SuperletError::FrequencyOutOfRange { f, nyquist });
    }
    Ok(())
}

/// Smallest FFT length used for block convolution.
const MIN_BLOCK_FFT: usize = 256;

/// FFT length for a wavelet of `len` taps: about four times the support,
/// so each block contributes at least three quarters new output.
fn block_fft_len(len: usize) -> usize {
    (4 * len).next_power_of_two().max(MIN_BLOCK_FFT)
}

/// Spectra of the signal cut into blocks of `fft_len − taps + 1`
/// samples, for one block FFT length.
struct BlockSet {
    fft_len: usize,
    block: usize,
    spectra: Vec<Vec<Complex64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Overlap-add convolution engine. Block spectra are computed once per FFT
/// length and reused by every wavelet that maps to that length.
struct SignalSpectrum {
    n: usize,
    sets: Vec<BlockSet>,
}

impl SignalSpectrum {
    /// Prepares one block set per distinct FFT length needed by
    /// `wavelet_lens`; block size follows the longest wavelet of each set.
    fn new(samples: &[f64], wavelet_lens: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let mut by_len: Vec<(usize, usize)> = Vec::new();
        for &len in wavelet_lens {
            let fft_len = block_fft_len(len);
            match by_len.iter_mut().find(|(n, _)| *n == fft_len) {
                Some((_, taps)) => *taps = (*taps).max(len),
                None => by_len.push((fft_len, len)),
            }
        }
        let sets = by_len
            .into_iter()
            .map(|(fft_len, taps)| {
                let forward = planner.plan_fft_forward(fft_len);
                let inverse = planner.plan_fft_inverse(fft_len);
                let block = fft_len + 1 - taps;
                let spectra = samples
                    .chunks(block)
                    .map(|chunk| {
                        let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
                        for (b, &x) in buf.iter_mut().zip(chunk) {
                            b.re = x;
                        }
                        forward.process(&mut buf);
                        buf
                    })
                    .collect();
                BlockSet {
                    fft_len,
                    block,
                    spectra,
                    forward,
                    inverse,
                }
            })
            .collect();
        Self {
            n: samples.len(),
            sets,
        }
    }

    /// `x ⋆ ψ` over the signal's own support ("same" alignment: output
    /// sample `t` is centred on input sample `t`).
    fn convolve(&self, wavelet: &[Complex64]) -> Vec<Complex64> {
        let fft_len = block_fft_len(wavelet.len());
        let set = self
            .sets
            .iter()
            .find(|s| s.fft_len == fft_len && s.block + wavelet.len() - 1 <= fft_len)
            .expect("block set prepared for every wavelet length");
        let half = wavelet.len() / 2;
        let mut kernel = vec![Complex64::new(0.0, 0.0); fft_len];
        kernel[..wavelet.len()].copy_from_slice(wavelet);
        set.forward.process(&mut kernel);

        let full = self.n + wavelet.len() - 1;
        let mut acc = vec![Complex64::new(0.0, 0.0); full];
        let mut buf = vec![Complex64::new(0.0, 0.0); fft_len];
        for (b, spectrum) in set.spectra.iter().enumerate() {
            for ((o, k), s) in buf.iter_mut().zip(&kernel).zip(spectrum) {
                *o = k * s;
            }
            set.inverse.process(&mut buf);
            let start = b * set.block;
            let end = (start + fft_len).min(full);
            for (a, v) in acc[start..end].iter_mut().zip(&buf) {
                *a += v;
            }
        }
        let scale = 1.0 / fft_len as f64;
        acc.truncate(half + self.n);
        acc.drain(..half);
        for a in &mut acc {
            *a *= scale;
        }
        acc
    }

    fn magnitude(&self, wavelet: &[Complex64]) -> Vec<f64> {
        self.convolve(wavelet).iter().map(|c| c.norm()).collect()
    }
}

/// Magnitude of the signal convolved with a Morlet wavelet at `f` Hz with
/// `cycles` cycles. Output has the input's length.
pub fn morlet_response(
    samples: &[f64],
    f: f64,
    cycles: f64,
    fs: f64,
    k_sd: f64,
) -> Result<Vec<f64>, SuperletError> {
    check_freq(f, fs)?;
    if !(cycles >= 1.0) {
        return Err(SuperletError::InvalidCycles(cycles));
    }
    let w = morlet_wavelet(f, cycles, fs, k_sd);
    let spec = SignalSpectrum::new(samples, &[w.len()]);
    Ok(spec.magnitude(&w))
}

/// Weighted geometric mean `(∏_{i≤k} R_i · R_{k+1}^α)^{1/(k+α)}` for
/// `order = k + α`. Accepts `⌈order⌉` series, or `k + 1` when α = 0 (the
/// last one then carries zero weight). Values are floored at
/// [`GEOMEAN_EPS`] except in the single-member case, which is returned as is.
pub fn fractional_geomean(responses: &[Vec<f64>], order: f64) -> Result<Vec<f64>, SuperletError> {
    if responses.is_empty() {
        return Err(SuperletError::EmptyResponseList);
    }
    if !(order >= 1.0) {
        return Err(SuperletError::OrderMismatch {
            order,
            needed: 1,
            got: responses.len(),
        });
    }
    let k = order.floor() as usize;
    let alpha = order - k as f64;
    let needed = if alpha > 0.0 { k + 1 } else { k };
    if responses.len() != needed && !(alpha == 0.0 && responses.len() == k + 1) {
        return Err(SuperletError::OrderMismatch {
            order,
            needed,
            got: responses.len(),
        });
    }
    let len = responses[0].len();
    if responses.iter().any(|r| r.len() != len) {
        return Err(SuperletError::LengthMismatch);
    }
    if k == 1 && alpha == 0.0 {
        return Ok(responses[0].clone());
    }
    let mut log_sum = vec![0.0; len];
    for r in &responses[..k] {
        for (acc, &v) in log_sum.iter_mut().zip(r) {
            *acc += v.max(GEOMEAN_EPS).ln();
        }
    }
    if alpha > 0.0 {
        for (acc, &v) in log_sum.iter_mut().zip(&responses[k]) {
            *acc += alpha * v.max(GEOMEAN_EPS).ln();
        }
    }
    let inv = 1.0 / order;
    Ok(log_sum.into_iter().map(|s| (s * inv).exp()).collect())
}

/// Full-resolution superlet magnitudes, `n_freqs × n_samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletResponse {
    pub magnitude: Vec<f64>,
    pub n_freqs: usize,
    pub n_samples: usize,
}

impl WaveletResponse {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.magnitude[i * self.n_samples..(i + 1) * self.n_samples]
    }
}

/// Computes the adaptive superlet response for every grid frequency.
pub fn superlet_response(
    samples: &[f64],
    cfg: &SuperletConfig,
    fs: f64,
) -> Result<WaveletResponse, SuperletError> {
    cfg.validate(fs)?;
    let plans: Vec<(f64, Vec<f64>)> = cfg
        .freqs
        .iter()
        .map(|&f| {
            let order = cfg.order_at(f);
            (order, cfg.cycle_set(order))
        })
        .collect();
    let max_half = cfg
        .freqs
        .iter()
        .zip(&plans)
        .flat_map(|(&f, (_, cycles))| {
            cycles
                .iter()
                .map(move |&c| wavelet_half_len(f, c, fs, cfg.k_sd))
        })
        .max()
        .unwrap_or(0);
    let needed = 2 * max_half + 1;
    if samples.len() < needed {
        return Err(SuperletError::InputTooShort {
            n_samples: samples.len(),
            needed,
        });
    }
    let lens: Vec<usize> = cfg
        .freqs
        .iter()
        .zip(&plans)
        .flat_map(|(&f, (_, cycles))| {
            cycles
                .iter()
                .map(move |&c| 2 * wavelet_half_len(f, c, fs, cfg.k_sd) + 1)
        })
        .collect();
    let spec = SignalSpectrum::new(samples, &lens);
    let n = samples.len();
    let mut magnitude = Vec::with_capacity(cfg.freqs.len() * n);
    let eps_sq = GEOMEAN_EPS * GEOMEAN_EPS;
    for (&f, (order, cycles)) in cfg.freqs.iter().zip(&plans) {
        if cycles.len() == 1 && *order == 1.0 {
            magnitude.extend(spec.magnitude(&morlet_wavelet(f, cycles[0], fs, cfg.k_sd)));
            continue;
        }
        // same rule as `fractional_geomean`, accumulated from |z|² directly
        let k = order.floor() as usize;
        let mut log_sum = vec![0.0; n];
        for (i, &c) in cycles.iter().enumerate() {
            let weight = if i < k { 0.5 } else { 0.5 * (order - k as f64) };
            if weight == 0.0 {
                continue;
            }
            let z = spec.convolve(&morlet_wavelet(f, c, fs, cfg.k_sd));
            for (acc, v) in log_sum.iter_mut().zip(&z) {
                *acc += weight * v.norm_sqr().max(eps_sq).ln();
            }
        }
        let inv = 1.0 / order;
        magnitude.extend(log_sum.into_iter().map(|s| (s * inv).exp()));
    }
    Ok(WaveletResponse {
        magnitude,
        n_freqs: cfg.freqs.len(),
        n_samples: n,
    })
}

/// Superlet scalogram pooled into frames: each frame is the mean of `R²`
/// over `frame_len` samples every `frame_hop`, reported as
/// `10·log10(mean + ε)` clamped at `db_floor`. Rows follow the frequency
/// grid in ascending order.
pub fn superlet_transform(
    samples: &[f64],
    cfg: &SuperletConfig,
    fs: f64,
) -> Result<SpectrogramTensor, SuperletError> {
    if samples.len() < cfg.frame_len {
        return Err(SuperletError::InputTooShort {
            n_samples: samples.len(),
            needed: cfg.frame_len,
        });
    }
    let resp = superlet_response(samples, cfg, fs)?;
    let frames = 1 + (samples.len() - cfg.frame_len) / cfg.frame_hop;
    let mut plane = vec![0.0; resp.n_freqs * frames];
    let mut prefix = vec![0.0; resp.n_samples + 1];
    for r in 0..resp.n_freqs {
        for (i, &m) in resp.row(r).iter().enumerate() {
            prefix[i + 1] = prefix[i] + m * m;
        }
        for t in 0..frames {
            let a = t * cfg.frame_hop;
            let mean = (prefix[a + cfg.frame_len] - prefix[a]) / cfg.frame_len as f64;
            plane[r * frames + t] =
                (10.0 * (mean.max(0.0) + crate::stft_mel::POWER_EPS).log10()).max(cfg.db_floor);
        }
    }
    Ok(SpectrogramTensor::from_planes(
        vec![plane],
        resp.n_freqs,
        frames,
        SpectrogramMode::Superlet,
        cfg.db_floor,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, fs: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * f * i as f64 / fs).sin())
            .collect()
    }

    fn small_cfg(freqs: Vec<f64>, omin: f64, omax: f64) -> SuperletConfig {
        SuperletConfig {
            freqs,
            base_cycles: 3.0,
            order_min: omin,
            order_max: omax,
            mode: CycleMode::Multiplicative,
            k_sd: 5.0,
            frame_len: 256,
            frame_hop: 128,
            db_floor: -100.0,
        }
    }

    #[test]
    fn wavelet_has_unit_norm() {
        let w = morlet_wavelet(440.0, 5.0, 16000.0, 5.0);
        let e: f64 = w.iter().map(|c| c.norm_sqr()).sum();
        assert!((e - 1.0).abs() < 1e-12);
        assert_eq!(w.len() % 2, 1);
    }

    #[test]
    fn zero_signal_zero_response() {
        let r = morlet_response(&[0.0; 4000], 300.0, 5.0, 8000.0, 5.0).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn response_rejects_bad_frequency() {
        assert!(matches!(
            morlet_response(&[0.0; 100], 4000.0, 3.0, 8000.0, 5.0),
            Err(SuperletError::FrequencyOutOfRange { .. })
        ));
        assert!(matches!(
            morlet_response(&[0.0; 100], 400.0, 0.5, 8000.0, 5.0),
            Err(SuperletError::InvalidCycles(_))
        ));
    }

    #[test]
    fn cycle_sets() {
        let cfg = small_cfg(vec![100.0], 3.0, 3.0);
        assert_eq!(cfg.cycle_set(3.0), vec![3.0, 6.0, 9.0]);
        assert_eq!(cfg.cycle_set(2.5), vec![3.0, 6.0, 9.0]);
        let add = SuperletConfig {
            mode: CycleMode::Additive,
            ..cfg
        };
        assert_eq!(add.cycle_set(3.0), vec![3.0, 4.0, 5.0]);
    }

    #[test]
    fn adaptive_order_is_linear_in_frequency() {
        let cfg = small_cfg(vec![100.0, 200.0, 1100.0], 1.0, 11.0);
        assert_eq!(cfg.order_at(100.0), 1.0);
        assert_eq!(cfg.order_at(1100.0), 11.0);
        assert!((cfg.order_at(200.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn geomean_examples() {
        let out = fractional_geomean(&[vec![4.0; 3], vec![9.0; 3]], 2.0).unwrap();
        assert!(out.iter().all(|&v| (v - 6.0).abs() < 1e-12));
        let s = vec![0.3, 2.0, 5.5];
        assert_eq!(
            fractional_geomean(std::slice::from_ref(&s), 1.0).unwrap(),
            s
        );
        // (4·9·16^0.5)^(1/2.5), evaluated independently: 7.300372...
        let out = fractional_geomean(&[vec![4.0], vec![9.0], vec![16.0]], 2.5).unwrap();
        assert!((out[0] - 7.300_372_102_718_47).abs() < 1e-12, "{}", out[0]);
        assert_eq!(
            fractional_geomean(&[], 1.0).unwrap_err(),
            SuperletError::EmptyResponseList
        );
        assert!(matches!(
            fractional_geomean(&[vec![1.0], vec![2.0]], 3.5),
            Err(SuperletError::OrderMismatch { .. })
        ));
    }

    #[test]
    fn order_one_transform_equals_morlet_response() {
        let fs = 8000.0;
        let x: Vec<f64> = (0..3000)
            .map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0)
            .collect();
        let cfg = small_cfg(vec![200.0, 500.0, 1500.0], 1.0, 1.0);
        let resp = superlet_response(&x, &cfg, fs).unwrap();
        for (i, &f) in cfg.freqs.iter().enumerate() {
            let m = morlet_response(&x, f, 3.0, fs, 5.0).unwrap();
            let scale = m.iter().copied().fold(0.0, f64::max);
            for (a, b) in resp.row(i).iter().zip(&m) {
                assert!((a - b).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn fractional_transform_matches_member_geomean() {
        let fs = 8000.0;
        let x: Vec<f64> = (0..3000)
            .map(|i| ((i * 104_729) % 211) as f64 / 105.0 - 1.0)
            .collect();
        let cfg = small_cfg(vec![300.0, 700.0, 1900.0], 1.5, 3.7);
        let resp = superlet_response(&x, &cfg, fs).unwrap();
        for (i, &f) in cfg.freqs.iter().enumerate() {
            let order = cfg.order_at(f);
            let members: Vec<Vec<f64>> = cfg
                .cycle_set(order)
                .iter()
                .map(|&c| morlet_response(&x, f, c, fs, cfg.k_sd).unwrap())
                .collect();
            let expect = fractional_geomean(&members, order).unwrap();
            for (a, b) in resp.row(i).iter().zip(&expect) {
                assert!((a - b).abs() <= 1e-9 * b.max(1e-9), "{a} vs {b}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn geomean_within_member_bounds(
            rows in proptest::collection::vec(
                proptest::collection::vec(1e-6f64..1e3, 8), 1..6),
            frac in 0.0f64..1.0,
        ) {
            let k = rows.len();
            let order = if k == 1 { 1.0 } else { (k - 1) as f64 + frac.max(1e-3) };
            let out = fractional_geomean(&rows, order).unwrap();
            for (t, &v) in out.iter().enumerate() {
                let lo = rows.iter().map(|r| r[t]).fold(f64::INFINITY, f64::min);
                let hi = rows.iter().map(|r| r[t]).fold(0.0, f64::max);
                proptest::prop_assert!(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn zero_input_maps_to_floor() {
        let cfg = small_cfg(vec![200.0, 800.0], 1.0, 4.0);
        let t = superlet_transform(&[0.0; 2000], &cfg, 8000.0).unwrap();
        assert!(t.data.iter().all(|&v| (v + 100.0).abs() < 1e-9));
        assert_eq!(t.shape(), [1, 2, 1 + (2000 - 256) / 128]);
    }

    #[test]
    fn too_short_input_rejected() {
        let cfg = small_cfg(vec![20.0], 1.0, 1.0);
        assert!(matches!(
            superlet_response(&[0.0; 100], &cfg, 8000.0),
            Err(SuperletError::InputTooShort { .. })
        ));
    }

    #[test]
    fn order_sharpening_is_monotone() {
        let fs = 8000.0;
        let x = tone(400.0, fs, 8000);
        let mut prev = 0.0;
        for order in 1..=5 {
            let cfg = small_cfg(vec![400.0, 800.0], order as f64, order as f64);
            let r = superlet_response(&x, &cfg, fs).unwrap();
            let mid = 4000;
            let ratio = r.row(0)[mid] / r.row(1)[mid];
            assert!(ratio >= prev, "order {order}: {ratio} < {prev}");
            prev = ratio;
        }
    }

    #[test]
    fn default_grid() {
        let cfg = SuperletConfig::default_for(16000.0);
        assert_eq!(cfg.freqs.len(), 64);
        assert!((cfg.freqs[0] - 50.0).abs() < 1e-9);
        assert!((cfg.freqs[63] - 7200.0).abs() < 1e-6);
        cfg.validate(16000.0).unwrap();
    }
}
