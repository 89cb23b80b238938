//! Deterministic synthetic corpora.
//!
//! The binary corpus mimics the clinical data layout: participants enrolled
//! over two date ranges, five sustained vowels each, labelled pass or fail.
//! Pass clips are clean harmonic vowels; fail clips add slow amplitude
//! modulation and strong pitch jitter ("roughness"). The public-style corpus
//! is a small multi-class sound set used for a pretraining stage.
//!
//! Every clip draws from its own ChaCha8 stream `(seed, clip index)`, so the
//! output does not depend on generation order or thread count.

use std::f64::consts::PI;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio_io::{encode_wav16, AudioClip};
use crate::manifest::{
    serialize_manifest, ClipRecord, Label, Manifest, ManifestError, ParticipantRecord, Task, Vowel,
};

/// Peak level of generated clips.
const PEAK: f64 = 0.5;
/// Harmonics stop below this fraction of the sample rate.
const HARMONIC_LIMIT: f64 = 0.3;
/// Breath-noise level relative to the voiced signal RMS.
const BREATH_LEVEL: f64 = 0.01;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
}

/// Sound generators. Frequencies in Hz, durations in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Formant-shaped harmonic series with cycle-level pitch jitter and
    /// optional sinusoidal amplitude modulation.
    HarmonicVowel {
        f0_min: f64,
        f0_max: f64,
        jitter: f64,
        #[serde(default)]
        am_depth: f64,
        #[serde(default = "default_am_min")]
        am_rate_min: f64,
        #[serde(default = "default_am_max")]
        am_rate_max: f64,
    },
    /// Clean harmonic vowel plus white noise at `snr_db`.
    NoisyVowel {
        f0_min: f64,
        f0_max: f64,
        snr_db: f64,
    },
    /// Linear sweep; endpoints vary ±10 % per clip.
    Chirp { f_start: f64, f_end: f64 },
    /// Tone pulses of `burst_s` separated by equal gaps.
    ToneBurst {
        freq_min: f64,
        freq_max: f64,
        burst_s: f64,
    },
    /// White noise restricted to `[low, high]`.
    NoiseBand { low: f64, high: f64 },
}

fn default_am_min() -> f64 {
    3.0
}

fn default_am_max() -> f64 {
    6.0
}

impl Generator {
    pub fn clean_vowel() -> Self {
        Generator::HarmonicVowel {
            f0_min: 100.0,
            f0_max: 220.0,
            jitter: 0.005,
            am_depth: 0.0,
            am_rate_min: 3.0,
            am_rate_max: 6.0,
        }
    }

    pub fn rough_vowel() -> Self {
        Generator::HarmonicVowel {
            f0_min: 100.0,
            f0_max: 220.0,
            jitter: 0.03,
            am_depth: 0.6,
            am_rate_min: 3.0,
            am_rate_max: 6.0,
        }
    }

    fn validate(&self, fs: f64) -> Result<(), CorpusError> {
        let nyq = fs / 2.0;
        let bad = |m: &str| Err(CorpusError::InvalidSpec(m.into()));
        match *self {
            Generator::HarmonicVowel {
                f0_min,
                f0_max,
                jitter,
                am_depth,
                am_rate_min,
                am_rate_max,
            } => {
                if !(f0_min > 0.0 && f0_min <= f0_max && f0_max < nyq) {
                    return bad("f0 range");
                }
                if !(0.0..0.5).contains(&jitter) || !(0.0..=1.0).contains(&am_depth) {
                    return bad("jitter must be in [0, 0.5) and am_depth in [0, 1]");
                }
                if !(am_rate_min > 0.0 && am_rate_min <= am_rate_max) {
                    return bad("modulation rate range");
                }
            }
            Generator::NoisyVowel { f0_min, f0_max, .. } => {
                if !(f0_min > 0.0 && f0_min <= f0_max && f0_max < nyq) {
                    return bad("f0 range");
                }
            }
            Generator::Chirp { f_start, f_end } => {
                if !(f_start > 0.0 && f_end > 0.0 && f_start.max(f_end) * 1.1 < nyq) {
                    return bad("chirp endpoints");
                }
            }
            Generator::ToneBurst {
                freq_min,
                freq_max,
                burst_s,
            } => {
                if !(freq_min > 0.0 && freq_min <= freq_max && freq_max < nyq && burst_s > 0.0) {
                    return bad("tone burst parameters");
                }
            }
            Generator::NoiseBand { low, high } => {
                if !(0.0 <= low && low < high && high <= nyq) {
                    return bad("noise band edges");
                }
            }
        }
        Ok(())
    }

    /// Renders one clip of `n` samples. `vowel` selects the formant set for
    /// vowel generators.
    pub fn render(&self, n: usize, fs: f64, vowel: Vowel, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x = match *self {
            Generator::HarmonicVowel {
                f0_min,
                f0_max,
                jitter,
                am_depth,
                am_rate_min,
                am_rate_max,
            } => {
                let f0 = rng.random_range(f0_min..=f0_max);
                let mut v = harmonic_vowel(n, fs, f0, jitter, vowel, rng);
                add_breath(&mut v, rng);
                if am_depth > 0.0 {
                    let rate = rng.random_range(am_rate_min..=am_rate_max);
                    let phase = rng.random_range(0.0..2.0 * PI);
                    for (i, s) in v.iter_mut().enumerate() {
                        let t = i as f64 / fs;
                        *s *= 1.0 + am_depth * (2.0 * PI * rate * t + phase).sin();
                    }
                }
                v
            }
            Generator::NoisyVowel {
                f0_min,
                f0_max,
                snr_db,
            } => {
                let f0 = rng.random_range(f0_min..=f0_max);
                let mut v = harmonic_vowel(n, fs, f0, 0.005, vowel, rng);
                let noise_rms = rms(&v) * 10f64.powf(-snr_db / 20.0);
                for s in &mut v {
                    let z: f64 = StandardNormal.sample(rng);
                    *s += noise_rms * z;
                }
                v
            }
            Generator::Chirp { f_start, f_end } => {
                let a = f_start * rng.random_range(0.9..1.1);
                let b = f_end * rng.random_range(0.9..1.1);
                let dur = n as f64 / fs;
                let phase0 = rng.random_range(0.0..2.0 * PI);
                (0..n)
                    .map(|i| {
                        let t = i as f64 / fs;
                        (phase0 + 2.0 * PI * (a * t + 0.5 * (b - a) / dur * t * t)).sin()
                    })
                    .collect()
            }
            Generator::ToneBurst {
                freq_min,
                freq_max,
                burst_s,
            } => {
                let f = rng.random_range(freq_min..=freq_max);
                let period = 2.0 * burst_s;
                let offset = rng.random_range(0.0..period);
                let ramp = 0.005;
                (0..n)
                    .map(|i| {
                        let t = i as f64 / fs;
                        let u = (t + offset) % period;
                        let gate = if u < burst_s {
                            (u / ramp).min((burst_s - u) / ramp).min(1.0)
                        } else {
                            0.0
                        };
                        gate * (2.0 * PI * f * t).sin()
                    })
                    .collect()
            }
            Generator::NoiseBand { low, high } => band_noise(n, fs, low, high, rng),
        };
        normalize_peak(&mut x);
        x
    }
}

/// Formant centre frequencies and bandwidths per vowel.
fn formants(v: Vowel) -> [(f64, f64); 3] {
    match v {
        Vowel::A => [(730.0, 90.0), (1090.0, 110.0), (2440.0, 170.0)],
        Vowel::E => [(530.0, 60.0), (1840.0, 100.0), (2480.0, 170.0)],
        Vowel::I => [(270.0, 60.0), (2290.0, 100.0), (3010.0, 180.0)],
        Vowel::O => [(570.0, 70.0), (840.0, 80.0), (2410.0, 170.0)],
        Vowel::U => [(300.0, 60.0), (870.0, 80.0), (2240.0, 160.0)],
    }
}

fn formant_gain(f: f64, v: Vowel) -> f64 {
    formants(v)
        .iter()
        .enumerate()
        .map(|(k, &(fc, bw))| {
            let q = (f - fc) / bw;
            0.5f64.powi(k as i32) / (1.0 + q * q)
        })
        .sum::<f64>()
        + 0.02
}

/// Harmonic source whose period is redrawn every cycle as
/// `f0·(1 + jitter·u)`, `u` uniform with unit variance.
fn harmonic_vowel(
    n: usize,
    fs: f64,
    f0: f64,
    jitter: f64,
    vowel: Vowel,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let k_max = ((HARMONIC_LIMIT * fs) / (f0 * (1.0 + 2.0 * jitter)))
        .floor()
        .max(1.0) as usize;
    let amps: Vec<f64> = (1..=k_max)
        .map(|k| formant_gain(k as f64 * f0, vowel) / k as f64)
        .collect();
    let phases: Vec<f64> = (0..k_max)
        .map(|_| rng.random_range(0.0..2.0 * PI))
        .collect();
    let spread = 3f64.sqrt();
    let mut cycle_f0 = f0 * (1.0 + jitter * rng.random_range(-spread..spread));
    let mut phi = 0.0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        // recurrence for sin(kφ + θ_k) would drift; direct evaluation is
        // cheap enough at these sizes
        let s: f64 = amps
            .iter()
            .zip(&phases)
            .enumerate()
            .map(|(k, (&a, &p))| a * ((k + 1) as f64 * phi + p).sin())
            .sum();
        out.push(s);
        phi += 2.0 * PI * cycle_f0 / fs;
        if phi >= 2.0 * PI {
            phi -= 2.0 * PI;
            cycle_f0 = f0 * (1.0 + jitter * rng.random_range(-spread..spread));
        }
    }
    out
}

fn add_breath(x: &mut [f64], rng: &mut ChaCha8Rng) {
    let level = BREATH_LEVEL * rms(x);
    for s in x {
        let z: f64 = StandardNormal.sample(rng);
        *s += level * z;
    }
}

fn band_noise(n: usize, fs: f64, low: f64, high: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * fs / n as f64;
        if f < low || f > high {
            *b = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

fn normalize_peak(x: &mut [f64]) {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        for v in x {
            *v *= PEAK / peak;
        }
    }
}

/// Enrollment window holding `n_participants` participants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnrollmentEpoch {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub n_participants: usize,
}

/// Binary pass/fail corpus written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub clips_per_participant: usize,
    /// Fail share, applied per epoch (rounded) so both splits keep it.
    pub fail_fraction: f64,
    pub pass: Generator,
    pub fail: Generator,
    pub seed: u64,
    pub sample_rate: u32,
    pub duration_s: f64,
    pub epochs: Vec<EnrollmentEpoch>,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid calendar date")
}

impl Default for CorpusSpec {
    fn default() -> Self {
        Self {
            clips_per_participant: 5,
            fail_fraction: 27.0 / 68.0,
            pass: Generator::clean_vowel(),
            fail: Generator::rough_vowel(),
            seed: 42,
            sample_rate: 16000,
            duration_s: 3.0,
            epochs: vec![
                EnrollmentEpoch {
                    start: date(2022, 6, 13),
                    end: date(2023, 1, 19),
                    n_participants: 40,
                },
                EnrollmentEpoch {
                    start: date(2023, 1, 24),
                    end: date(2023, 3, 4),
                    n_participants: 28,
                },
            ],
        }
    }
}

impl CorpusSpec {
    /// First day of the second epoch: the leakage-free split date.
    pub fn split_cutoff(&self) -> Option<NaiveDate> {
        self.epochs.get(1).map(|e| e.start)
    }

    pub fn n_participants(&self) -> usize {
        self.epochs.iter().map(|e| e.n_participants).sum()
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fs = self.sample_rate as f64;
        if self.sample_rate == 0 || !(self.duration_s > 0.0) {
            return Err(CorpusError::InvalidSpec(
                "sample_rate and duration must be positive".into(),
            ));
        }
        if self.clips_per_participant == 0 {
            return Err(CorpusError::InvalidSpec(
                "clips_per_participant must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.fail_fraction) {
            return Err(CorpusError::InvalidSpec(
                "fail_fraction outside [0, 1]".into(),
            ));
        }
        if self.epochs.is_empty() || self.epochs.iter().any(|e| e.end < e.start) {
            return Err(CorpusError::InvalidSpec(
                "epochs must be non-empty date ranges".into(),
            ));
        }
        self.pass.validate(fs)?;
        self.fail.validate(fs)
    }
}

/// Participant plan without audio: ids, labels, dates and clip layout.
pub fn plan_manifest(spec: &CorpusSpec) -> Result<Manifest, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let total_fail = (spec.n_participants() as f64 * spec.fail_fraction).round() as usize;
    let mut participants = Vec::new();
    let mut fails_left = total_fail;
    let mut pid = 0;
    for (ei, epoch) in spec.epochs.iter().enumerate() {
        let n = epoch.n_participants;
        let n_fail = if ei + 1 == spec.epochs.len() {
            fails_left.min(n)
        } else {
            ((n as f64 * spec.fail_fraction).round() as usize).min(fails_left)
        };
        fails_left -= n_fail;
        let mut labels: Vec<Label> = (0..n)
            .map(|i| if i < n_fail { Label::Fail } else { Label::Pass })
            .collect();
        rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);
        let span = (epoch.end - epoch.start).num_days();
        for label in labels {
            pid += 1;
            let participant_id = format!("P{pid:03}");
            let enrollment_date = epoch.start + chrono::Duration::days(rng.random_range(0..=span));
            let clips = (0..spec.clips_per_participant)
                .map(|c| {
                    let vowel = Vowel::ALL[c % 5];
                    let rep = (c / 5) as u32 + 1;
                    let task = Task::Vowel(vowel);
                    let clip_id = format!("{participant_id}_{task}_{rep}");
                    ClipRecord {
                        file_path: PathBuf::from("audio")
                            .join(&participant_id)
                            .join(format!("{clip_id}.wav")),
                        clip_id,
                        task,
                        repetition_index: rep,
                        excluded: false,
                    }
                })
                .collect();
            participants.push(ParticipantRecord {
                participant_id,
                label,
                enrollment_date,
                clips,
            });
        }
    }
    participants.sort_by_key(|p| p.enrollment_date);
    let mut m = Manifest::new(participants)?;
    m.split_cutoff = spec.split_cutoff();
    Ok(m)
}

/// Audio for every clip of a planned manifest, in manifest order.
pub fn render_clips(spec: &CorpusSpec, m: &Manifest) -> Vec<(PathBuf, AudioClip)> {
    let fs = spec.sample_rate as f64;
    let n = (spec.duration_s * fs).round() as usize;
    let jobs: Vec<(&ParticipantRecord, &ClipRecord)> = m
        .participants
        .iter()
        .flat_map(|p| p.clips.iter().map(move |c| (p, c)))
        .collect();
    jobs.par_iter()
        .enumerate()
        .map(|(i, (p, c))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(1 + i as u64);
            let vowel = match c.task {
                Task::Vowel(v) => v,
                _ => Vowel::A,
            };
            let generator = match p.label {
                Label::Pass => &spec.pass,
                Label::Fail => &spec.fail,
            };
            let samples = generator.render(n, fs, vowel, &mut rng);
            (
                c.file_path.clone(),
                AudioClip::new(samples, spec.sample_rate).with_clip_id(c.clip_id.clone()),
            )
        })
        .collect()
}

/// Writes WAV files, `manifest.csv` and `corpus_spec.json` under `out_dir`.
pub fn generate(spec: &CorpusSpec, out_dir: &Path) -> Result<Manifest, CorpusError> {
    let m = plan_manifest(spec)?;
    fs::create_dir_all(out_dir)?;
    for (rel, clip) in render_clips(spec, &m) {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, encode_wav16(&clip))?;
    }
    fs::write(out_dir.join("manifest.csv"), serialize_manifest(&m))?;
    fs::write(
        out_dir.join("corpus_spec.json"),
        serde_json::to_string_pretty(spec).expect("spec serializes") + "\n",
    )?;
    Ok(m)
}

/// Multi-class corpus kept in memory for pretraining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PublicCorpusSpec {
    pub classes: Vec<Generator>,
    pub clips_per_class: usize,
    pub seed: u64,
    pub sample_rate: u32,
    pub duration_s: f64,
}

impl Default for PublicCorpusSpec {
    fn default() -> Self {
        Self {
            classes: vec![
                Generator::HarmonicVowel {
                    f0_min: 90.0,
                    f0_max: 250.0,
                    jitter: 0.01,
                    am_depth: 0.0,
                    am_rate_min: 3.0,
                    am_rate_max: 6.0,
                },
                Generator::NoisyVowel {
                    f0_min: 90.0,
                    f0_max: 250.0,
                    snr_db: 3.0,
                },
                Generator::Chirp {
                    f_start: 200.0,
                    f_end: 3000.0,
                },
                Generator::ToneBurst {
                    freq_min: 400.0,
                    freq_max: 2500.0,
                    burst_s: 0.15,
                },
                Generator::NoiseBand {
                    low: 1000.0,
                    high: 3500.0,
                },
            ],
            clips_per_class: 12,
            seed: 7,
            sample_rate: 16000,
            duration_s: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub clip: AudioClip,
    pub class: usize,
}

/// Clips ordered class-major; clip `k` of class `c` uses stream
/// `(seed, c·clips_per_class + k)`.
pub fn generate_public(spec: &PublicCorpusSpec) -> Result<Vec<LabeledClip>, CorpusError> {
    let fs = spec.sample_rate as f64;
    if spec.classes.len() < 2 || spec.clips_per_class == 0 || !(spec.duration_s > 0.0) {
        return Err(CorpusError::InvalidSpec(
            "need two or more classes, clips and a positive duration".into(),
        ));
    }
    for g in &spec.classes {
        g.validate(fs)?;
    }
    let n = (spec.duration_s * fs).round() as usize;
    let total = spec.classes.len() * spec.clips_per_class;
    Ok((0..total)
        .into_par_iter()
        .map(|i| {
            let class = i / spec.clips_per_class;
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let vowel = Vowel::ALL[i % 5];
            let samples = spec.classes[class].render(n, fs, vowel, &mut rng);
            LabeledClip {
                clip: AudioClip::new(samples, spec.sample_rate)
                    .with_clip_id(format!("public_{class}_{}", i % spec.clips_per_class)),
                class,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::{parse_manifest, split_by_epoch, validate_manifest};

    fn small(n_a: usize, n_b: usize) -> CorpusSpec {
        let mut spec = CorpusSpec {
            clips_per_participant: 1,
            duration_s: 0.25,
            ..CorpusSpec::default()
        };
        spec.epochs[0].n_participants = n_a;
        spec.epochs[1].n_participants = n_b;
        spec
    }

    #[test]
    fn default_plan_matches_cohort() {
        let m = plan_manifest(&CorpusSpec::default()).unwrap();
        let counts = m.label_counts();
        assert_eq!((counts.fail, counts.pass), (27, 41));
        assert_eq!(m.n_clips(), 340);
        let (train, test) = split_by_epoch(&m, m.split_cutoff.unwrap()).unwrap();
        assert_eq!(
            (train.participants.len(), test.participants.len()),
            (40, 28)
        );
        assert!(test.label_counts().fail > 0 && train.label_counts().fail > 0);
    }

    #[test]
    fn two_participants_one_clip() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate(&small(1, 1), dir.path()).unwrap();
        assert_eq!(m.n_clips(), 2);
        let text = fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        let parsed = parse_manifest(&text).unwrap();
        assert!(validate_manifest(&parsed, dir.path()).is_clean());
    }

    #[test]
    fn same_seed_same_bytes() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let m = generate(&small(2, 2), a.path()).unwrap();
        generate(&small(2, 2), b.path()).unwrap();
        for p in &m.participants {
            for c in &p.clips {
                let x = fs::read(a.path().join(&c.file_path)).unwrap();
                let y = fs::read(b.path().join(&c.file_path)).unwrap();
                assert_eq!(x, y);
            }
        }
    }

    #[test]
    fn public_corpus_is_deterministic() {
        let spec = PublicCorpusSpec {
            clips_per_class: 2,
            duration_s: 0.2,
            ..PublicCorpusSpec::default()
        };
        let a = generate_public(&spec).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, generate_public(&spec).unwrap());
        assert!(a.iter().all(|c| {
            let peak = c.clip.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (peak - PEAK).abs() < 1e-12
        }));
    }

    #[test]
    fn invalid_generator_rejected() {
        let spec = CorpusSpec {
            fail: Generator::NoiseBand {
                low: 3000.0,
                high: 100.0,
            },
            ..CorpusSpec::default()
        };
        assert!(matches!(
            plan_manifest(&spec),
            Err(CorpusError::InvalidSpec(_))
        ));
    }
}
