//! Participant-level evaluation.
//!
//! Clip predictions are aggregated per participant by majority vote (an
//! exact tie resolves to Fail, the positive class), participants are scored
//! by their mean clip Fail-probability, and the report carries the
//! confusion matrix, the metric set, the ROC curve and a stratified
//! bootstrap interval for the AUC.

mod report;
mod roc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::manifest::Label;

pub use report::{
    build_report, read_report, roc_csv, write_report, BootstrapInfo, EvalOptions, EvaluationReport,
    ParticipantRow, ScoreKind, REPORT_SCHEMA_VERSION,
};
pub use roc::{
    auc_mann_whitney, auc_trapezoid, bootstrap_ci, percentile, roc_auc, RocCurve, RocPoint,
};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("participant {0:?} has no clip predictions")]
    EmptyGroup(String),
    #[error("prediction and truth lists are not aligned at index {index}: {pred:?} vs {truth:?}")]
    IdMismatch {
        index: usize,
        pred: String,
        truth: String,
    },
    #[error("ROC analysis needs at least one Fail and one Pass participant")]
    SingleClassInput,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("report i/o: {0}")]
    IoFailure(String),
    #[error("report parse: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipVote {
    pub clip_id: String,
    pub label: Label,
    /// Probability of Fail.
    pub probability: f64,
}

impl ClipVote {
    /// Fail when `probability ≥ 0.5`.
    pub fn from_probability(clip_id: impl Into<String>, probability: f64) -> Self {
        Self {
            clip_id: clip_id.into(),
            label: if probability >= 0.5 {
                Label::Fail
            } else {
                Label::Pass
            },
            probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantPrediction {
    pub participant_id: String,
    pub clip_votes: Vec<ClipVote>,
    pub vote_label: Label,
    pub mean_prob: f64,
}

impl ParticipantPrediction {
    /// Share of clips voting Fail.
    pub fn vote_fraction(&self) -> f64 {
        let fails = self
            .clip_votes
            .iter()
            .filter(|v| v.label == Label::Fail)
            .count();
        fails as f64 / self.clip_votes.len() as f64
    }
}

/// Strict majority wins; an exact tie goes to Fail.
pub fn majority_vote(labels: &[Label]) -> Option<Label> {
    if labels.is_empty() {
        return None;
    }
    let fails = labels.iter().filter(|&&l| l == Label::Fail).count();
    Some(if 2 * fails >= labels.len() {
        Label::Fail
    } else {
        Label::Pass
    })
}

pub fn aggregate_participant(
    participant_id: &str,
    clip_votes: Vec<ClipVote>,
) -> Result<ParticipantPrediction, EvalError> {
    let labels: Vec<Label> = clip_votes.iter().map(|v| v.label).collect();
    let vote_label =
        majority_vote(&labels).ok_or_else(|| EvalError::EmptyGroup(participant_id.into()))?;
    let mean_prob = clip_votes.iter().map(|v| v.probability).sum::<f64>() / clip_votes.len() as f64;
    Ok(ParticipantPrediction {
        participant_id: participant_id.into(),
        clip_votes,
        vote_label,
        mean_prob,
    })
}

/// Fail is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub fp: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fn_: u64, fp: u64, tn: u64) -> Self {
        Self { tp, fn_, fp, tn }
    }

    pub fn add(&mut self, pred: Label, truth: Label) {
        match (truth, pred) {
            (Label::Fail, Label::Fail) => self.tp += 1,
            (Label::Fail, Label::Pass) => self.fn_ += 1,
            (Label::Pass, Label::Fail) => self.fp += 1,
            (Label::Pass, Label::Pass) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

/// Confusion counts from participant-aligned `(id, label)` lists.
pub fn confusion(
    preds: &[(String, Label)],
    truth: &[(String, Label)],
) -> Result<ConfusionMatrix, EvalError> {
    if preds.len() != truth.len() {
        return Err(EvalError::IdMismatch {
            index: preds.len().min(truth.len()),
            pred: format!("{} predictions", preds.len()),
            truth: format!("{} truths", truth.len()),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (index, ((pid, p), (tid, t))) in preds.iter().zip(truth).enumerate() {
        if pid != tid {
            return Err(EvalError::IdMismatch {
                index,
                pred: pid.clone(),
                truth: tid.clone(),
            });
        }
        cm.add(*p, *t);
    }
    Ok(cm)
}

/// Metric set; ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    pub auc_ci: Option<(f64, f64)>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Threshold metrics from a confusion matrix (AUC fields left empty).
pub fn metrics(cm: &ConfusionMatrix) -> MetricSet {
    let sensitivity = ratio(cm.tp, cm.tp + cm.fn_);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    MetricSet {
        sensitivity,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        precision,
        f1,
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        auc: None,
        auc_ci: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Fail, Pass};

    fn votes(labels: &[Label]) -> Vec<ClipVote> {
        labels
            .iter()
            .enumerate()
            .map(|(i, &l)| ClipVote {
                clip_id: format!("c{i}"),
                label: l,
                probability: if l == Fail { 0.8 } else { 0.2 },
            })
            .collect()
    }

    #[test]
    fn voting_examples() {
        let p = aggregate_participant("p", votes(&[Fail, Fail, Pass])).unwrap();
        assert_eq!(p.vote_label, Fail);
        assert_eq!(
            aggregate_participant("p", votes(&[Fail, Pass]))
                .unwrap()
                .vote_label,
            Fail
        );
        assert_eq!(
            aggregate_participant("p", votes(&[Pass, Pass, Fail]))
                .unwrap()
                .vote_label,
            Pass
        );
        assert_eq!(
            aggregate_participant("p", vec![]).unwrap_err(),
            EvalError::EmptyGroup("p".into())
        );
        let probs = [0.2, 0.4, 0.9]
            .iter()
            .enumerate()
            .map(|(i, &p)| ClipVote::from_probability(format!("c{i}"), p))
            .collect();
        let p = aggregate_participant("p", probs).unwrap();
        assert!((p.mean_prob - 0.5).abs() < 1e-15);
        assert_eq!(ClipVote::from_probability("x", 0.5).label, Fail);
    }

    type Votes = Vec<(String, Label)>;

    fn aligned(pred: &[Label], truth: &[Label]) -> (Votes, Votes) {
        let ids = |v: &[Label]| {
            v.iter()
                .enumerate()
                .map(|(i, &l)| (format!("p{i}"), l))
                .collect::<Vec<_>>()
        };
        (ids(pred), ids(truth))
    }

    #[test]
    fn confusion_examples() {
        let truth: Vec<Label> = [vec![Fail; 9], vec![Pass; 19]].concat();
        let (p, t) = aligned(&truth, &truth);
        let cm = confusion(&p, &t).unwrap();
        assert_eq!((cm.fn_, cm.fp), (0, 0));

        let (p, t) = aligned(&[Pass; 28], &truth);
        assert_eq!(
            confusion(&p, &t).unwrap(),
            ConfusionMatrix::new(0, 9, 0, 19)
        );

        let mut pred = truth.clone();
        pred[3] = Pass;
        pred[7] = Pass;
        let (p, t) = aligned(&pred, &truth);
        assert_eq!(
            confusion(&p, &t).unwrap(),
            ConfusionMatrix::new(7, 2, 0, 19)
        );

        let (mut p, t) = aligned(&pred, &truth);
        p.swap(0, 1);
        assert!(matches!(
            confusion(&p, &t),
            Err(EvalError::IdMismatch { index: 0, .. })
        ));
    }

    #[test]
    fn metric_examples() {
        let m = metrics(&ConfusionMatrix::new(7, 2, 0, 19));
        let r2 = |v: Option<f64>| (v.unwrap() * 100.0).round() / 100.0;
        assert_eq!(r2(m.sensitivity), 0.78);
        assert_eq!(r2(m.specificity), 1.0);
        assert_eq!(r2(m.precision), 1.0);
        assert_eq!(r2(m.f1), 0.88);

        let m = metrics(&ConfusionMatrix::new(0, 0, 0, 12));
        assert_eq!((m.sensitivity, m.precision), (None, None));
        assert_eq!(m.specificity, Some(1.0));

        let m = metrics(&ConfusionMatrix::new(5, 0, 0, 4));
        for v in [m.sensitivity, m.specificity, m.precision, m.f1, m.accuracy] {
            assert_eq!(v, Some(1.0));
        }
    }

    proptest! {
        #[test]
        fn vote_matches_count_oracle(v in prop::collection::vec(any::<bool>(), 1..12)) {
            let labels: Vec<Label> = v.iter().map(|&f| if f { Fail } else { Pass }).collect();
            let fails = v.iter().filter(|&&f| f).count();
            let passes = v.len() - fails;
            let want = if fails >= passes { Fail } else { Pass };
            prop_assert_eq!(majority_vote(&labels), Some(want));
        }

        #[test]
        fn metrics_ignore_order(
            pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..40),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let lab = |f: bool| if f { Fail } else { Pass };
            let mk = |ps: &[(bool, bool)]| {
                let p: Vec<_> = ps.iter().enumerate().map(|(i, x)| (format!("p{i}"), lab(x.0))).collect();
                let t: Vec<_> = ps.iter().enumerate().map(|(i, x)| (format!("p{i}"), lab(x.1))).collect();
                metrics(&confusion(&p, &t).unwrap())
            };
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(mk(&pairs), mk(&shuffled));
        }
    }
}
