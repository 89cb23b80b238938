use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::manifest::Label;

/// One operating point. `threshold` is the score at or above which a
/// participant is called Fail; `None` is the "call nobody" origin point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

fn split(scores: &[f64], truth: &[Label]) -> Result<(Vec<f64>, Vec<f64>), EvalError> {
    if scores.len() != truth.len() {
        return Err(EvalError::InvalidArgument(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(EvalError::InvalidArgument("NaN score".into()));
    }
    let pos: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| t.is_positive())
        .map(|(&s, _)| s)
        .collect();
    let neg: Vec<f64> = scores
        .iter()
        .zip(truth)
        .filter(|(_, &t)| !t.is_positive())
        .map(|(&s, _)| s)
        .collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(EvalError::SingleClassInput);
    }
    Ok((pos, neg))
}

/// Mann–Whitney AUC through mid-ranks: `(R₊ − n₊(n₊+1)/2) / (n₊·n₋)`.
pub fn auc_mann_whitney(pos: &[f64], neg: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|&s| (s, true))
        .chain(neg.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * all[i..=j].iter().filter(|x| x.1).count() as f64;
        i = j + 1;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

/// Area under piecewise-linear ROC points, sorted as produced by
/// [`roc_auc`].
pub fn auc_trapezoid(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// ROC points swept over the unique scores (descending) and the
/// Mann–Whitney AUC.
pub fn roc_auc(scores: &[f64], truth: &[Label]) -> Result<RocCurve, EvalError> {
    let (pos, neg) = split(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: None,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / nn,
            tpr: tp as f64 / np,
            threshold: Some(s),
        });
    }
    Ok(RocCurve {
        auc: auc_mann_whitney(&pos, &neg),
        points,
    })
}

/// Linear-interpolation percentile (`q ∈ [0, 1]`) of sorted data.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Stratified percentile bootstrap interval for the AUC. Resample `i`
/// draws from its own ChaCha8 stream `(seed, i)`, so the interval does not
/// depend on scheduling.
pub fn bootstrap_ci(
    scores: &[f64],
    truth: &[Label],
    n_resamples: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64), EvalError> {
    if n_resamples < 100 {
        return Err(EvalError::InvalidArgument(format!(
            "n_resamples {n_resamples} below 100"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(EvalError::InvalidArgument(format!(
            "level {level} outside (0, 1)"
        )));
    }
    let (pos, neg) = split(scores, truth)?;
    let mut aucs: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let p: Vec<f64> = (0..pos.len())
                .map(|_| pos[rng.random_range(0..pos.len())])
                .collect();
            let n: Vec<f64> = (0..neg.len())
                .map(|_| neg[rng.random_range(0..neg.len())])
                .collect();
            auc_mann_whitney(&p, &n)
        })
        .collect();
    aucs.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok((percentile(&aucs, alpha), percentile(&aucs, 1.0 - alpha)))
}
