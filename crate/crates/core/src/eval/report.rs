//! Versioned JSON evaluation report.
//!
//! Schema (version 1):
//!
//! ```text
//! schema_version  u32
//! config_hash     hex string
//! seed            u64
//! mode            preprocessing mode tag
//! options         {score, n_resamples, level}
//! participants    [{participant_id, truth, vote_label, mean_prob, score,
//!                   clip_votes: [{clip_id, label, probability}]}]
//! confusion       {tp, fn, fp, tn}
//! metrics         {sensitivity, specificity, precision, f1, accuracy, auc,
//!                  auc_ci: [lo, hi]}   (null where undefined)
//! roc             [{fpr, tpr, threshold}]   (threshold null at the origin)
//! ```
//!
//! The report holds no timestamps or host details, so identical inputs
//! serialize to identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    bootstrap_ci, confusion, metrics, roc_auc, ClipVote, ConfusionMatrix, EvalError, MetricSet,
    ParticipantPrediction, RocPoint,
};
use crate::manifest::Label;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Participant score used for the ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    #[default]
    MeanProb,
    VoteFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub score: ScoreKind,
    pub n_resamples: usize,
    pub level: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            score: ScoreKind::MeanProb,
            n_resamples: 2000,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantRow {
    pub participant_id: String,
    pub truth: Label,
    pub vote_label: Label,
    pub mean_prob: f64,
    pub score: f64,
    pub clip_votes: Vec<ClipVote>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInfo {
    pub n_resamples: usize,
    pub level: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub mode: String,
    pub options: EvalOptions,
    pub participants: Vec<ParticipantRow>,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub roc: Vec<RocPoint>,
}

impl EvaluationReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        serde_json::from_str(text).map_err(|e| EvalError::Parse(e.to_string()))
    }

    /// Metrics recomputed from the participant table.
    pub fn recomputed_metrics(&self) -> MetricSet {
        let mut cm = ConfusionMatrix::default();
        for p in &self.participants {
            cm.add(p.vote_label, p.truth);
        }
        metrics(&cm)
    }
}

/// Assembles the report. Participants are ordered by id; `truth` must
/// cover every predicted participant.
pub fn build_report(
    predictions: &[ParticipantPrediction],
    truth: &BTreeMap<String, Label>,
    options: &EvalOptions,
    config_hash: &str,
    seed: u64,
    mode: &str,
) -> Result<EvaluationReport, EvalError> {
    let mut preds: Vec<&ParticipantPrediction> = predictions.iter().collect();
    preds.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
    let mut participants = Vec::with_capacity(preds.len());
    for p in preds {
        let t = *truth
            .get(&p.participant_id)
            .ok_or_else(|| EvalError::IdMismatch {
                index: participants.len(),
                pred: p.participant_id.clone(),
                truth: "<missing>".into(),
            })?;
        let score = match options.score {
            ScoreKind::MeanProb => p.mean_prob,
            ScoreKind::VoteFraction => p.vote_fraction(),
        };
        participants.push(ParticipantRow {
            participant_id: p.participant_id.clone(),
            truth: t,
            vote_label: p.vote_label,
            mean_prob: p.mean_prob,
            score,
            clip_votes: p.clip_votes.clone(),
        });
    }
    let pred_list: Vec<(String, Label)> = participants
        .iter()
        .map(|r| (r.participant_id.clone(), r.vote_label))
        .collect();
    let truth_list: Vec<(String, Label)> = participants
        .iter()
        .map(|r| (r.participant_id.clone(), r.truth))
        .collect();
    let cm = confusion(&pred_list, &truth_list)?;
    let mut m = metrics(&cm);
    let scores: Vec<f64> = participants.iter().map(|r| r.score).collect();
    let labels: Vec<Label> = participants.iter().map(|r| r.truth).collect();
    let roc = match roc_auc(&scores, &labels) {
        Ok(curve) => {
            m.auc = Some(curve.auc);
            m.auc_ci = Some(bootstrap_ci(
                &scores,
                &labels,
                options.n_resamples,
                options.level,
                seed,
            )?);
            curve.points
        }
        Err(EvalError::SingleClassInput) => Vec::new(),
        Err(e) => return Err(e),
    };
    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config_hash: config_hash.into(),
        seed,
        mode: mode.into(),
        options: *options,
        participants,
        confusion: cm,
        metrics: m,
        roc,
    })
}

pub fn write_report(report: &EvaluationReport, path: &Path) -> Result<(), EvalError> {
    fs::write(path, report.to_json())
        .map_err(|e| EvalError::IoFailure(format!("{}: {e}", path.display())))
}

pub fn read_report(path: &Path) -> Result<EvaluationReport, EvalError> {
    let text = fs::read_to_string(path)
        .map_err(|e| EvalError::IoFailure(format!("{}: {e}", path.display())))?;
    EvaluationReport::from_json(&text)
}

/// ROC points as `fpr,tpr,threshold`; the origin's threshold is `inf`.
pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut s = String::from("fpr,tpr,threshold\n");
    for p in points {
        let t = p
            .threshold
            .map_or_else(|| "inf".to_string(), |t| t.to_string());
        let _ = writeln!(s, "{},{},{t}", p.fpr, p.tpr);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::aggregate_participant;

    fn fixture() -> (Vec<ParticipantPrediction>, BTreeMap<String, Label>) {
        let probs = [
            ("a", Label::Fail, vec![0.9, 0.7, 0.4]),
            ("b", Label::Fail, vec![0.3, 0.6]),
            ("c", Label::Pass, vec![0.2, 0.1, 0.6]),
            ("d", Label::Pass, vec![0.45, 0.5, 0.05]),
            ("e", Label::Fail, vec![0.2, 0.3, 0.1]),
        ];
        let mut preds = Vec::new();
        let mut truth = BTreeMap::new();
        for (id, t, ps) in probs.iter().rev() {
            let votes = ps
                .iter()
                .enumerate()
                .map(|(i, &p)| ClipVote::from_probability(format!("{id}{i}"), p))
                .collect();
            preds.push(aggregate_participant(id, votes).unwrap());
            truth.insert(id.to_string(), *t);
        }
        (preds, truth)
    }

    #[test]
    fn report_round_trip_and_consistency() {
        let (preds, truth) = fixture();
        let opts = EvalOptions {
            n_resamples: 300,
            ..EvalOptions::default()
        };
        let r = build_report(&preds, &truth, &opts, "h", 3, "mel_rgb").unwrap();
        assert_eq!(r.participants[0].participant_id, "a");
        let back = EvaluationReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let re = r.recomputed_metrics();
        assert_eq!(
            (
                re.sensitivity,
                re.specificity,
                re.precision,
                re.f1,
                re.accuracy
            ),
            (
                r.metrics.sensitivity,
                r.metrics.specificity,
                r.metrics.precision,
                r.metrics.f1,
                r.metrics.accuracy
            )
        );
        let again = build_report(&preds, &truth, &opts, "h", 3, "mel_rgb").unwrap();
        assert_eq!(again.to_json(), r.to_json());
        let (lo, hi) = r.metrics.auc_ci.unwrap();
        assert!(0.0 <= lo && lo <= hi && hi <= 1.0);
    }

    #[test]
    fn roc_csv_format() {
        let csv = roc_csv(&[
            RocPoint {
                fpr: 0.0,
                tpr: 0.0,
                threshold: None,
            },
            RocPoint {
                fpr: 0.5,
                tpr: 1.0,
                threshold: Some(0.25),
            },
        ]);
        assert_eq!(csv, "fpr,tpr,threshold\n0,0,inf\n0.5,1,0.25\n");
    }

    #[test]
    fn single_class_report_has_no_auc() {
        let (preds, mut truth) = fixture();
        for v in truth.values_mut() {
            *v = Label::Pass;
        }
        let r = build_report(&preds, &truth, &EvalOptions::default(), "h", 0, "m").unwrap();
        assert_eq!(r.metrics.auc, None);
        assert!(r.roc.is_empty());
        assert_eq!(r.metrics.sensitivity, None);
    }
}
