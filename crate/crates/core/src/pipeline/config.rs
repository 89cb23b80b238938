use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::audio_io::SegmentConfig;
use crate::eval::EvalOptions;
use crate::model::{ModelConfig, StageConfig, TrainConfig};
use crate::render::Normalization;
use crate::stft_mel::{FftSetting, MelParams};
use crate::superlet::SuperletConfig;
use crate::synth_corpus::{CorpusSpec, PublicCorpusSpec};

/// Classifier input representation. One per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocMode {
    /// Single log-mel plane through a colormap into RGB.
    #[default]
    MelRgb,
    /// Three log-mel planes with different FFT settings as channels.
    MelMono3,
    /// Superlet scalogram through a colormap into RGB.
    Superlet,
}

impl PreprocMode {
    pub const ALL: [PreprocMode; 3] = [
        PreprocMode::MelRgb,
        PreprocMode::MelMono3,
        PreprocMode::Superlet,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            PreprocMode::MelRgb => "mel_rgb",
            PreprocMode::MelMono3 => "mel_mono3",
            PreprocMode::Superlet => "superlet",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub mel: MelParams,
    pub mel_rgb: FftSetting,
    pub mel_mono3: [FftSetting; 3],
    /// `None` uses the default grid for the working sample rate.
    pub superlet: Option<SuperletConfig>,
    pub normalization: Normalization,
    pub colormap: String,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            mel: MelParams::default(),
            mel_rgb: FftSetting::new(2048, 512),
            mel_mono3: [
                FftSetting::new(1024, 256),
                FftSetting::new(2048, 512),
                FftSetting::new(4096, 1024),
            ],
            superlet: None,
            normalization: Normalization::RelativeToMax { range_db: 80.0 },
            colormap: "viridis".into(),
        }
    }
}

impl FeatureConfig {
    pub fn superlet_for(&self, sample_rate: f64) -> SuperletConfig {
        self.superlet
            .clone()
            .unwrap_or_else(|| SuperletConfig::default_for(sample_rate))
    }

    /// The settings that affect `mode`'s features, as JSON.
    pub fn slice(&self, mode: PreprocMode, sample_rate: f64) -> serde_json::Value {
        let common = serde_json::json!({
            "normalization": self.normalization,
            "colormap": self.colormap,
        });
        let specific = match mode {
            PreprocMode::MelRgb => serde_json::json!({ "mel": self.mel, "fft": self.mel_rgb }),
            PreprocMode::MelMono3 => serde_json::json!({ "mel": self.mel, "fft": self.mel_mono3 }),
            PreprocMode::Superlet => {
                serde_json::json!({ "superlet": self.superlet_for(sample_rate) })
            }
        };
        serde_json::json!({ "mode": mode.tag(), "common": common, "specific": specific })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    /// One PNG per segment under `images/`.
    pub images: bool,
    /// Tensor dumps under `tensors/` (spectrogram command only).
    pub tensors: bool,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            images: true,
            tensors: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Manifest CSV; audio paths resolve against its directory. `None`
    /// generates the synthetic corpus described by `corpus`.
    pub manifest: Option<PathBuf>,
    pub corpus: CorpusSpec,
    /// Train/test boundary. Defaults to the synthetic corpus's second epoch
    /// when no manifest is given.
    pub split_cutoff: Option<NaiveDate>,
    pub mode: PreprocMode,
    pub features: FeatureConfig,
    pub segmentation: SegmentConfig,
    /// Used when a training stage names the `public` dataset.
    pub pretrain_corpus: PublicCorpusSpec,
    /// `input_shape` is replaced by the shape of the computed features.
    pub model: ModelConfig,
    /// Stage datasets: `public` (pretraining corpus) and `train`.
    /// `train.seed` is replaced by `seed`.
    pub train: TrainConfig,
    pub evaluation: EvalOptions,
    pub export: ExportConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Defaults to `out_dir/cache`.
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            corpus: CorpusSpec::default(),
            split_cutoff: None,
            mode: PreprocMode::default(),
            features: FeatureConfig::default(),
            segmentation: SegmentConfig::default(),
            pretrain_corpus: PublicCorpusSpec::default(),
            model: ModelConfig::default(),
            train: TrainConfig {
                stages: vec![
                    StageConfig {
                        dataset_id: "public".into(),
                        epochs: 5,
                        ..StageConfig::default()
                    },
                    StageConfig::default(),
                ],
                ..TrainConfig::default()
            },
            evaluation: EvalOptions::default(),
            export: ExportConfig::default(),
            seed: 42,
            out_dir: PathBuf::from("specpipe-out"),
            cache_dir: None,
            jobs: None,
        }
    }
}

impl PipelineConfig {
    pub fn cache_dir(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .unwrap_or_else(|| self.out_dir.join("cache"))
    }

    pub fn uses_public(&self) -> bool {
        self.train.stages.iter().any(|s| s.dataset_id == "public")
    }

    /// Checks cross-field constraints that serde cannot express.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.manifest.is_some() && self.split_cutoff.is_none() {
            return bad("split_cutoff: required when a manifest is given".into());
        }
        if self.train.stages.is_empty() {
            return bad("train.stages: at least one stage is required".into());
        }
        if self.train.stages.last().map(|s| s.dataset_id.as_str()) != Some("train") {
            return bad("train.stages: the last stage must use the `train` dataset".into());
        }
        for (i, s) in self.train.stages.iter().enumerate() {
            if s.dataset_id != "train" && s.dataset_id != "public" {
                return bad(format!(
                    "train.stages[{i}].dataset_id: unknown dataset {:?} (expected train or public)",
                    s.dataset_id
                ));
            }
            s.validate()
                .map_err(|e| PipelineError::Config(format!("train.stages[{i}]: {e}")))?;
        }
        if crate::render::Colormap::by_name(&self.features.colormap).is_none() {
            return bad(format!(
                "features.colormap: unknown colormap {:?}",
                self.features.colormap
            ));
        }
        if self.jobs == Some(0) {
            return bad("jobs: must be at least 1".into());
        }
        if !(self.evaluation.level > 0.0 && self.evaluation.level < 1.0) {
            return bad("evaluation.level: must lie in (0, 1)".into());
        }
        if self.evaluation.n_resamples < 100 {
            return bad("evaluation.n_resamples: must be at least 100".into());
        }
        Ok(())
    }
}

/// Parses a config; errors name the offending field path.
pub fn parse_config(text: &str) -> Result<PipelineConfig, PipelineError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        PipelineError::Config(format!("{path}: {}", e.inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// SHA-256 of the config JSON without `out_dir`, `cache_dir` and `jobs`,
/// which do not affect results.
pub fn config_hash(cfg: &PipelineConfig) -> String {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(map) = v.as_object_mut() {
        for key in ["out_dir", "cache_dir", "jobs"] {
            map.remove(key);
        }
    }
    hex::encode(Sha256::digest(v.to_string().as_bytes()))
}
