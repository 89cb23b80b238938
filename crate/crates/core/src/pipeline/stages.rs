use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::{extract, PendingSegment};
use super::{config_hash, FeatureSet, PipelineConfig, PipelineError, PreprocMode};
use crate::audio_io::{read_wav, resample, segment, write_segment_dump, AudioSegment};
use crate::eval::{
    aggregate_participant, build_report, roc_csv, ClipVote, ConfusionMatrix, EvaluationReport,
    MetricSet,
};
use crate::manifest::{parse_manifest, split_by_epoch, validate_manifest, Label, Manifest};
use crate::model::{
    load_checkpoint, predict_clip, save_checkpoint, train, Dataset, ModelParams, TrainLog,
};
use crate::render::{confusion_plot, export_png, image_file_name, render_channels, roc_plot};
use crate::synth_corpus::{self, generate_public, CorpusSpec};
use crate::tensor::{write_tensor_dump, SpectrogramTensor};

/// Runs `f` on a pool of `jobs` threads (all cores when `None`).
pub fn with_jobs<R: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, PipelineError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| PipelineError::Config(format!("jobs: {e}")))?;
    Ok(pool.install(f))
}

fn create_dir(p: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(p).map_err(|e| PipelineError::io(p.display(), e))
}

fn write(p: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    fs::write(p, bytes).map_err(|e| PipelineError::io(p.display(), e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

/// Writes the synthetic binary corpus to `out`.
pub fn generate_stage(spec: &CorpusSpec, out: &Path) -> Result<Manifest, PipelineError> {
    Ok(synth_corpus::generate(spec, out)?)
}

/// Resolved data for a run: the manifest, its audio root and the split.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub audio_root: PathBuf,
    pub manifest: Manifest,
    pub cutoff: NaiveDate,
    pub train: Manifest,
    pub test: Manifest,
}

/// Loads (or generates) the corpus, validates it and splits by epoch.
pub fn prepare(cfg: &PipelineConfig) -> Result<Prepared, PipelineError> {
    let (manifest_path, cutoff) = match &cfg.manifest {
        Some(p) => (p.clone(), cfg.split_cutoff.expect("validated")),
        None => {
            let spec_json = serde_json::to_string(&cfg.corpus).expect("spec serializes");
            let tag = hex::encode(&Sha256::digest(spec_json.as_bytes())[..6]);
            let dir = cfg.cache_dir().join(format!("corpus-{tag}"));
            let done = dir.join("complete");
            if !done.exists() {
                info!("generating synthetic corpus in {}", dir.display());
                generate_stage(&cfg.corpus, &dir)?;
                write(&done, &spec_json)?;
            }
            let cutoff = cfg
                .split_cutoff
                .or(cfg.corpus.split_cutoff())
                .ok_or_else(|| {
                    PipelineError::Config("split_cutoff: corpus has a single epoch".into())
                })?;
            (dir.join("manifest.csv"), cutoff)
        }
    };
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| PipelineError::io(manifest_path.display(), e))?;
    let manifest = parse_manifest(&text)?;
    let audio_root = manifest_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let report = validate_manifest(&manifest, &audio_root);
    if !report.is_clean() {
        let issues: Vec<String> = report
            .issues
            .iter()
            .take(5)
            .map(|i| format!("{i:?}"))
            .collect();
        return Err(PipelineError::Data(format!(
            "manifest: {} validation issue(s): {}",
            report.issues.len(),
            issues.join("; ")
        )));
    }
    let (train, test) = split_by_epoch(&manifest, cutoff)?;
    info!(
        "split at {cutoff}: {} train / {} test participants",
        train.participants.len(),
        test.participants.len()
    );
    Ok(Prepared {
        audio_root,
        manifest,
        cutoff,
        train,
        test,
    })
}

/// Reads, resamples and segments every active clip of `m`, in manifest order.
fn load_segments(
    cfg: &PipelineConfig,
    m: &Manifest,
    root: &Path,
) -> Result<Vec<PendingSegment>, PipelineError> {
    let seg = &cfg.segmentation;
    let clips: Vec<(&str, Label, &crate::manifest::ClipRecord)> = m
        .participants
        .iter()
        .flat_map(|p| {
            p.active_clips()
                .map(move |c| (p.participant_id.as_str(), p.label, c))
        })
        .collect();
    let per_clip: Vec<Vec<PendingSegment>> = clips
        .par_iter()
        .map(|(pid, label, c)| {
            let path = root.join(&c.file_path);
            let clip = read_wav(&path)
                .map_err(|e| PipelineError::Data(format!("audio_io: {}: {e}", path.display())))?;
            let clip = resample(&clip, seg.sample_rate)?;
            Ok(segment(&clip, seg.window_s, seg.hop_s, seg.pad_policy)?
                .into_iter()
                .map(|s: AudioSegment| PendingSegment {
                    participant_id: pid.to_string(),
                    clip_id: c.clip_id.clone(),
                    start_time: s.start_time,
                    label: label.index(),
                    samples: s.samples,
                })
                .collect())
        })
        .collect::<Result<_, PipelineError>>()?;
    Ok(per_clip.into_iter().flatten().collect())
}

fn features_for(
    cfg: &PipelineConfig,
    m: &Manifest,
    root: &Path,
) -> Result<(FeatureSet, Vec<SpectrogramTensor>), PipelineError> {
    let segs = load_segments(cfg, m, root)?;
    extract(
        segs,
        cfg.segmentation.sample_rate,
        cfg.mode,
        &cfg.features,
        &cfg.cache_dir().join("features"),
    )
}

fn public_features(cfg: &PipelineConfig) -> Result<(FeatureSet, usize), PipelineError> {
    let seg = &cfg.segmentation;
    let clips = generate_public(&cfg.pretrain_corpus)?;
    let mut pending = Vec::new();
    for lc in clips {
        let clip = resample(&lc.clip, seg.sample_rate)?;
        let id = lc.clip.clip_id.clone().unwrap_or_default();
        for s in segment(&clip, seg.window_s, seg.hop_s, seg.pad_policy)? {
            pending.push(PendingSegment {
                participant_id: "public".into(),
                clip_id: id.clone(),
                start_time: s.start_time,
                label: lc.class,
                samples: s.samples,
            });
        }
    }
    let (fs, _) = extract(
        pending,
        seg.sample_rate,
        cfg.mode,
        &cfg.features,
        &cfg.cache_dir().join("features"),
    )?;
    Ok((fs, cfg.pretrain_corpus.classes.len()))
}

fn dataset(id: &str, fs: FeatureSet, n_classes: usize) -> Dataset {
    let (inputs, labels) = fs.items.into_iter().map(|s| (s.input, s.label)).unzip();
    Dataset {
        id: id.into(),
        inputs,
        labels,
        n_classes,
    }
}

/// Writes raw segment dumps for every active clip to `out_dir/segments`.
pub fn segment_stage(cfg: &PipelineConfig) -> Result<usize, PipelineError> {
    let prep = prepare(cfg)?;
    let hash = config_hash(cfg);
    let dir = cfg.out_dir.join("segments");
    create_dir(&dir)?;
    let segs = load_segments(cfg, &prep.manifest, &prep.audio_root)?;
    for s in &segs {
        let seg = AudioSegment {
            samples: s.samples.clone(),
            start_time: s.start_time,
            parent: Some(s.clip_id.clone()),
        };
        write_segment_dump(&seg, cfg.segmentation.sample_rate, &dir, Some(&hash))
            .map_err(|e| PipelineError::io(dir.display(), e))?;
    }
    Ok(segs.len())
}

fn export_images(
    cfg: &PipelineConfig,
    fs: &FeatureSet,
    tensors: &[SpectrogramTensor],
    hash: &str,
) -> Result<(), PipelineError> {
    let dir = cfg.out_dir.join("images");
    create_dir(&dir)?;
    let tdir = cfg.out_dir.join("tensors");
    if cfg.export.tensors {
        create_dir(&tdir)?;
    }
    let settings = cfg
        .features
        .slice(cfg.mode, cfg.segmentation.sample_rate as f64);
    fs.items
        .par_iter()
        .zip(tensors)
        .try_for_each(|(s, t)| -> Result<(), PipelineError> {
            let name = image_file_name(&s.clip_id, s.start_time, cfg.mode.tag());
            if cfg.export.images {
                let img = render_channels(t)?;
                export_png(
                    &img,
                    &dir.join(&name),
                    &[
                        ("config_hash", hash),
                        ("mode", cfg.mode.tag()),
                        ("clip_id", &s.clip_id),
                    ],
                )?;
            }
            if cfg.export.tensors {
                let stem = tdir.join(name.trim_end_matches(".png"));
                write_tensor_dump(t, &stem, settings.clone(), Some(hash))
                    .map_err(|e| PipelineError::io(stem.display(), e))?;
            }
            Ok(())
        })
}

/// Computes (and caches) features for every clip and exports images.
/// Returns the number of segments.
pub fn spectrogram_stage(cfg: &PipelineConfig) -> Result<usize, PipelineError> {
    let prep = prepare(cfg)?;
    let hash = config_hash(cfg);
    let (fs, tensors) = features_for(cfg, &prep.manifest, &prep.audio_root)?;
    if cfg.export.images || cfg.export.tensors {
        export_images(cfg, &fs, &tensors, &hash)?;
    }
    Ok(fs.items.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrainLogFile {
    config_hash: String,
    mode: PreprocMode,
    input_shape: [usize; 3],
    n_segments: BTreeMap<String, usize>,
    log: TrainLog,
}

/// Result of [`train_stage`]: parameters as reloaded from the checkpoint.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: TrainLog,
    pub checkpoint: PathBuf,
    pub n_train_segments: usize,
}

/// Trains every configured stage and writes `checkpoint.bin` and
/// `train_log.json`.
pub fn train_stage(cfg: &PipelineConfig) -> Result<TrainOutcome, PipelineError> {
    let prep = prepare(cfg)?;
    let hash = config_hash(cfg);
    create_dir(&cfg.out_dir)?;
    let (train_fs, _) = features_for(cfg, &prep.train, &prep.audio_root)?;
    if train_fs.items.is_empty() {
        return Err(PipelineError::Data(
            "train split has no active clips".into(),
        ));
    }
    let shape = train_fs.shape;
    let mut n_segments = BTreeMap::new();
    n_segments.insert("train".to_string(), train_fs.items.len());
    let mut datasets = vec![dataset("train", train_fs, 2)];
    if cfg.uses_public() {
        let (pub_fs, n_classes) = public_features(cfg)?;
        if pub_fs.shape != shape {
            return Err(PipelineError::Config(format!(
                "pretrain_corpus: feature shape {:?} differs from the binary corpus {:?}",
                pub_fs.shape, shape
            )));
        }
        n_segments.insert("public".to_string(), pub_fs.items.len());
        datasets.push(dataset("public", pub_fs, n_classes));
    }
    let mut model = cfg.model.clone();
    model.input_shape = shape;
    let mut tc = cfg.train.clone();
    tc.seed = cfg.seed;
    info!(
        "training {} stage(s) on input {:?}, mode {}",
        tc.stages.len(),
        shape,
        cfg.mode.tag()
    );
    let n_train_segments = n_segments["train"];
    let (params, log) = train(&datasets, &model, &tc)?;
    let ckpt = cfg.out_dir.join("checkpoint.bin");
    save_checkpoint(&params, &ckpt, Some(&hash), tc.stages.len() - 1)?;
    let (reloaded, _) = load_checkpoint(&ckpt)?;
    write(
        &cfg.out_dir.join("train_log.json"),
        to_json(&TrainLogFile {
            config_hash: hash,
            mode: cfg.mode,
            input_shape: shape,
            n_segments,
            log: log.clone(),
        }),
    )?;
    Ok(TrainOutcome {
        params: reloaded,
        log,
        checkpoint: ckpt,
        n_train_segments,
    })
}

fn evaluate_with(
    cfg: &PipelineConfig,
    prep: &Prepared,
    params: &ModelParams,
) -> Result<(EvaluationReport, usize), PipelineError> {
    let hash = config_hash(cfg);
    let (test_fs, _) = features_for(cfg, &prep.test, &prep.audio_root)?;
    let probs: Vec<f64> = test_fs
        .items
        .par_iter()
        .map(|s| predict_clip(params, &s.input))
        .collect::<Result<_, _>>()?;
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(PipelineError::Numerical(
            "model: non-finite prediction".into(),
        ));
    }
    // clip probability = mean over its segments
    let mut by_clip: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
    for (s, &p) in test_fs.items.iter().zip(&probs) {
        let e = by_clip
            .entry((s.participant_id.as_str(), s.clip_id.as_str()))
            .or_insert((0.0, 0));
        e.0 += p;
        e.1 += 1;
    }
    let mut truth = BTreeMap::new();
    let mut preds = Vec::new();
    for p in &prep.test.participants {
        let votes: Vec<ClipVote> = p
            .active_clips()
            .filter_map(|c| {
                by_clip
                    .get(&(p.participant_id.as_str(), c.clip_id.as_str()))
                    .map(|&(sum, n)| ClipVote::from_probability(c.clip_id.clone(), sum / n as f64))
            })
            .collect();
        if votes.is_empty() {
            warn!("participant {} has no evaluable clips", p.participant_id);
            continue;
        }
        truth.insert(p.participant_id.clone(), p.label);
        preds.push(aggregate_participant(&p.participant_id, votes)?);
    }
    let report = build_report(
        &preds,
        &truth,
        &cfg.evaluation,
        &hash,
        cfg.seed,
        cfg.mode.tag(),
    )?;
    Ok((report, test_fs.items.len()))
}

fn write_eval_artifacts(cfg: &PipelineConfig, r: &EvaluationReport) -> Result<(), PipelineError> {
    let out = &cfg.out_dir;
    create_dir(out)?;
    write(&out.join("report.json"), r.to_json())?;
    write(&out.join("roc.csv"), roc_csv(&r.roc))?;
    let text = [
        ("config_hash", r.config_hash.as_str()),
        ("mode", r.mode.as_str()),
    ];
    let pts: Vec<(f64, f64)> = r.roc.iter().map(|p| (p.fpr, p.tpr)).collect();
    export_png(&roc_plot(&pts, 256), &out.join("roc.png"), &text)?;
    let c = r.confusion;
    export_png(
        &confusion_plot(c.tp, c.fn_, c.fp, c.tn, 64),
        &out.join("confusion.png"),
        &text,
    )?;
    Ok(())
}

/// Evaluates a checkpoint (default `out_dir/checkpoint.bin`) on the test
/// split and writes the report artifacts.
pub fn evaluate_stage(
    cfg: &PipelineConfig,
    checkpoint: Option<&Path>,
) -> Result<EvaluationReport, PipelineError> {
    let prep = prepare(cfg)?;
    let path = checkpoint.map_or_else(|| cfg.out_dir.join("checkpoint.bin"), Path::to_path_buf);
    let (params, meta) = load_checkpoint(&path)?;
    let hash = config_hash(cfg);
    if meta.config_hash.as_deref() != Some(hash.as_str()) {
        warn!(
            "checkpoint {} was trained under a different config",
            path.display()
        );
    }
    let (report, _) = evaluate_with(cfg, &prep, &params)?;
    write_eval_artifacts(cfg, &report)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub mode: PreprocMode,
    pub seed: u64,
    pub split_cutoff: NaiveDate,
    pub n_train_participants: usize,
    pub n_test_participants: usize,
    pub n_train_segments: usize,
    pub n_test_segments: usize,
    pub final_param_hash: String,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    /// Paths relative to `out_dir`.
    pub artifacts: Vec<String>,
}

/// Full pipeline: features and images, training, evaluation, summary.
pub fn run(cfg: &PipelineConfig) -> Result<RunSummary, PipelineError> {
    let hash = config_hash(cfg);
    create_dir(&cfg.out_dir)?;
    write(&cfg.out_dir.join("config.json"), to_json(cfg))?;
    let prep = prepare(cfg)?;
    if cfg.export.images || cfg.export.tensors {
        spectrogram_stage(cfg)?;
    }
    let trained = train_stage(cfg)?;
    let (report, n_test_segments) = evaluate_with(cfg, &prep, &trained.params)?;
    write_eval_artifacts(cfg, &report)?;
    let mut artifacts: Vec<String> = [
        "config.json",
        "train_log.json",
        "checkpoint.bin",
        "report.json",
        "roc.csv",
        "roc.png",
        "confusion.png",
        "summary.json",
    ]
    .map(String::from)
    .to_vec();
    if cfg.export.images {
        artifacts.push("images/".into());
    }
    if cfg.export.tensors {
        artifacts.push("tensors/".into());
    }
    let summary = RunSummary {
        config_hash: hash,
        mode: cfg.mode,
        seed: cfg.seed,
        split_cutoff: prep.cutoff,
        n_train_participants: prep.train.participants.len(),
        n_test_participants: report.participants.len(),
        n_train_segments: trained.n_train_segments,
        n_test_segments,
        final_param_hash: trained.params.hash(),
        confusion: report.confusion,
        metrics: report.metrics,
        artifacts,
    };
    write(&cfg.out_dir.join("summary.json"), to_json(&summary))?;
    Ok(summary)
}
