//! End-to-end orchestration: corpus → segments → features → staged
//! training → participant-level evaluation → artifacts.
//!
//! A run is driven by one [`PipelineConfig`]. Every field has a default, so
//! `{}` is a complete config: it generates the bundled synthetic corpus,
//! pretrains on the public-style corpus and fine-tunes on the binary task.
//!
//! Output layout under `out_dir`:
//!
//! ```text
//! config.json       resolved config
//! train_log.json    per-stage losses and parameter hashes
//! checkpoint.bin    fine-tuned parameters (f32)
//! report.json       evaluation report
//! roc.csv  roc.png  confusion.png
//! images/           one PNG per segment
//! summary.json      counts, metrics, artifact list
//! cache/            feature cache and generated corpora
//! ```

mod compare;
mod config;
mod features;
mod stages;

use thiserror::Error;

use crate::audio_io::AudioError;
use crate::eval::EvalError;
use crate::manifest::ManifestError;
use crate::model::ModelError;
use crate::render::RenderError;
use crate::stft_mel::DspError;
use crate::superlet::SuperletError;
use crate::synth_corpus::CorpusError;

pub use compare::{compare_runs, CompareRow, CompareTable};
pub use config::{
    config_hash, load_config, parse_config, ExportConfig, FeatureConfig, PipelineConfig,
    PreprocMode,
};
pub use features::{feature_cache_key, segment_input, FeatureSet, SegmentFeature};
pub use stages::{
    evaluate_stage, generate_stage, prepare, run, segment_stage, spectrogram_stage, train_stage,
    with_jobs, Prepared, RunSummary, TrainOutcome,
};

/// Errors grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("compare: {0}")]
    MissingRun(String),
}

impl PipelineError {
    /// 1 config, 2 data or i/o, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Data(_) | PipelineError::MissingRun(_) => 2,
            PipelineError::Numerical(_) => 3,
        }
    }

    pub(crate) fn io(context: impl std::fmt::Display, e: std::io::Error) -> Self {
        PipelineError::Data(format!("io: {context}: {e}"))
    }
}

impl From<ManifestError> for PipelineError {
    fn from(e: ManifestError) -> Self {
        PipelineError::Data(format!("manifest: {e}"))
    }
}

impl From<AudioError> for PipelineError {
    fn from(e: AudioError) -> Self {
        match e {
            AudioError::InvalidSegmentation { .. } => {
                PipelineError::Config(format!("audio_io: {e}"))
            }
            _ => PipelineError::Data(format!("audio_io: {e}")),
        }
    }
}

impl From<DspError> for PipelineError {
    fn from(e: DspError) -> Self {
        match e {
            DspError::InputTooShort { .. } => PipelineError::Data(format!("stft_mel: {e}")),
            _ => PipelineError::Config(format!("stft_mel: {e}")),
        }
    }
}

impl From<SuperletError> for PipelineError {
    fn from(e: SuperletError) -> Self {
        match e {
            SuperletError::InputTooShort { .. } => PipelineError::Data(format!("superlet: {e}")),
            SuperletError::InvalidConfig(_)
            | SuperletError::FrequencyOutOfRange { .. }
            | SuperletError::InvalidCycles(_) => PipelineError::Config(format!("superlet: {e}")),
            _ => PipelineError::Numerical(format!("superlet: {e}")),
        }
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::NonFiniteGradient | ModelError::NonFiniteParams(_) => {
                PipelineError::Numerical(format!("model: {e}"))
            }
            ModelError::InvalidConfig(_)
            | ModelError::UnknownDataset(_)
            | ModelError::ShapeMismatch { .. } => PipelineError::Config(format!("model: {e}")),
            _ => PipelineError::Data(format!("model: {e}")),
        }
    }
}

impl From<EvalError> for PipelineError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidArgument(_) => PipelineError::Config(format!("eval: {e}")),
            _ => PipelineError::Data(format!("eval: {e}")),
        }
    }
}

impl From<RenderError> for PipelineError {
    fn from(e: RenderError) -> Self {
        PipelineError::Data(format!("render: {e}"))
    }
}

impl From<CorpusError> for PipelineError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::InvalidSpec(_) => PipelineError::Config(format!("synth_corpus: {e}")),
            _ => PipelineError::Data(format!("synth_corpus: {e}")),
        }
    }
}
