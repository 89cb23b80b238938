//! Weighted cross-entropy blended with a pairwise margin contrastive term.
//!
//! `L = λ·CE_w + (1 − λ)·L_con` where
//! `CE_w = Σ w_{y_i}·(−log softmax(z_i)[y_i]) / Σ w_{y_i}` and `L_con` is
//! the mean over unordered pairs of `d²` (same label) or `max(0, m − d)²`
//! (different labels), `d` the Euclidean distance between embeddings.

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub cross_entropy: f64,
    pub contrastive: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub parts: LossParts,
    pub dlogits: Vec<Vec<f64>>,
    pub dembeddings: Vec<Vec<f64>>,
}

/// Inverse-frequency weights `w_c = N / (C · N_c)`.
pub fn class_weights(counts: &[usize]) -> Result<Vec<f64>, ModelError> {
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(ModelError::EmptyClass(c));
    }
    let total: usize = counts.iter().sum();
    let k = counts.len() as f64;
    Ok(counts
        .iter()
        .map(|&n| total as f64 / (k * n as f64))
        .collect())
}

fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|&v| v - lse).collect()
}

fn check(
    logits: &[Vec<f64>],
    embeddings: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    lambda: f64,
    margin: f64,
) -> Result<(), ModelError> {
    let n = logits.len();
    if embeddings.len() != n || labels.len() != n {
        return Err(ModelError::InvalidConfig(
            "logits, embeddings and labels differ in length".into(),
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(ModelError::InvalidConfig(format!(
            "lambda {lambda} outside [0, 1]"
        )));
    }
    if !(margin > 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "margin {margin} must be positive"
        )));
    }
    if n == 0 || (lambda < 1.0 && n < 2) {
        return Err(ModelError::DegenerateBatch(n));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= weights.len()) {
        return Err(ModelError::InvalidConfig(format!(
            "label {y} has no class weight"
        )));
    }
    Ok(())
}

/// Loss and its gradients with respect to logits and (normalized)
/// embeddings. With `d = 0` between differently labelled embeddings the
/// contrastive gradient is taken as zero.
pub fn hybrid_loss_grad(
    logits: &[Vec<f64>],
    embeddings: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    lambda: f64,
    margin: f64,
) -> Result<LossGrad, ModelError> {
    check(logits, embeddings, labels, weights, lambda, margin)?;
    let n = logits.len();

    let wsum: f64 = labels.iter().map(|&y| weights[y]).sum();
    let mut ce = 0.0;
    let mut dlogits = Vec::with_capacity(n);
    for (z, &y) in logits.iter().zip(labels) {
        let ls = log_softmax(z);
        let w = weights[y] / wsum;
        ce -= w * ls[y];
        dlogits.push(
            ls.iter()
                .enumerate()
                .map(|(c, &l)| lambda * w * (l.exp() - f64::from(u8::from(c == y))))
                .collect::<Vec<f64>>(),
        );
    }

    let mut con = 0.0;
    let mut dembeddings: Vec<Vec<f64>> = embeddings.iter().map(|e| vec![0.0; e.len()]).collect();
    if lambda < 1.0 {
        let pairs = (n * (n - 1) / 2) as f64;
        let scale = (1.0 - lambda) / pairs;
        for i in 0..n {
            for j in i + 1..n {
                let diff: Vec<f64> = embeddings[i]
                    .iter()
                    .zip(&embeddings[j])
                    .map(|(a, b)| a - b)
                    .collect();
                let d = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
                // coefficient c such that ∂ℓ/∂e_i = c·(e_i − e_j)
                let coeff = if labels[i] == labels[j] {
                    con += d * d;
                    2.0
                } else if d < margin {
                    con += (margin - d).powi(2);
                    if d > 0.0 {
                        -2.0 * (margin - d) / d
                    } else {
                        0.0
                    }
                } else {
                    0.0
                };
                if coeff != 0.0 {
                    for (k, &v) in diff.iter().enumerate() {
                        dembeddings[i][k] += scale * coeff * v;
                        dembeddings[j][k] -= scale * coeff * v;
                    }
                }
            }
        }
        con /= pairs;
    }
    Ok(LossGrad {
        parts: LossParts {
            total: lambda * ce + (1.0 - lambda) * con,
            cross_entropy: ce,
            contrastive: con,
        },
        dlogits,
        dembeddings,
    })
}

/// Scalar hybrid loss (see module docs).
pub fn hybrid_loss(
    logits: &[Vec<f64>],
    embeddings: &[Vec<f64>],
    labels: &[usize],
    weights: &[f64],
    lambda: f64,
    margin: f64,
) -> Result<LossParts, ModelError> {
    hybrid_loss_grad(logits, embeddings, labels, weights, lambda, margin).map(|g| g.parts)
}
