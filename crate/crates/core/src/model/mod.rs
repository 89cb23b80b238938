//! Compact reference classifier with hand-written backpropagation.
//!
//! Architecture ([`Architecture::Cnn`]): three 3×3 convolutions with stride 2
//! and padding 1, each followed by ReLU, then global average pooling to a
//! feature vector `h`. Two heads read `h`: a linear embedding projection,
//! L2-normalized, feeding the contrastive term, and a linear classifier
//! producing the logits. [`Architecture::LinearProbe`] skips the
//! convolutions and uses the flattened input as `h`.
//!
//! All parameters live in one flat `f64` vector described by a list of
//! [`ParamBlock`]s, which keeps the optimizer, checkpointing and
//! finite-difference checks trivial.

mod adam;
mod checkpoint;
mod loss;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use adam::{adam_step, adam_step_masked, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointMeta,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use loss::{class_weights, hybrid_loss, hybrid_loss_grad, LossGrad, LossParts};
pub use train::{
    evaluate_dataset, train, train_from, ClassWeighting, Dataset, StageConfig, StageLog,
    TrainConfig, TrainLog, ValidationLog,
};

/// Uniform init bound is `INIT_GAIN / sqrt(fan_in)` (He-uniform for ReLU).
pub const INIT_GAIN: f64 = 2.449_489_742_783_178; // sqrt(6)
/// Norm floor for the embedding normalization.
pub const EMBED_NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("input has {got} values, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("class {0} has no examples")]
    EmptyClass(usize),
    #[error("contrastive term needs a batch of at least 2, got {0}")]
    DegenerateBatch(usize),
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite parameters after step {0}")]
    NonFiniteParams(u64),
    #[error("dataset {0:?} is empty")]
    EmptyDataset(String),
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Cnn,
    LinearProbe,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// `[channels, rows, frames]`
    pub input_shape: [usize; 3],
    pub widths: [usize; 3],
    pub embed_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            architecture: Architecture::Cnn,
            input_shape: [3, 128, 90],
            widths: [8, 16, 32],
            embed_dim: 32,
        }
    }
}

impl ModelConfig {
    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn feature_dim(&self) -> usize {
        match self.architecture {
            Architecture::Cnn => self.widths[2],
            Architecture::LinearProbe => self.input_len(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.input_shape.contains(&0) {
            return Err(ModelError::InvalidConfig(
                "input_shape has a zero extent".into(),
            ));
        }
        if self.architecture == Architecture::Cnn && self.widths.contains(&0) {
            return Err(ModelError::InvalidConfig(
                "conv widths must be positive".into(),
            ));
        }
        if self.embed_dim == 0 {
            return Err(ModelError::InvalidConfig(
                "embed_dim must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `(channels, rows, frames)` at the input and after each conv stage.
    fn dims(&self) -> [(usize, usize, usize); 4] {
        let [c, mut h, mut w] = self.input_shape;
        let mut out = [(c, h, w); 4];
        for (k, &width) in self.widths.iter().enumerate() {
            h = h.div_ceil(2);
            w = w.div_ceil(2);
            out[k + 1] = (width, h, w);
        }
        out
    }
}

/// Parameter groups addressable by a stage's freeze mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamGroup {
    Conv1,
    Conv2,
    Conv3,
    Embed,
    Head,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub group: ParamGroup,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub fan_in: usize,
}

impl ParamBlock {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }

    fn is_bias(&self) -> bool {
        self.name.ends_with(".b")
    }
}

/// Block list for a configuration and class count.
pub fn param_layout(cfg: &ModelConfig, n_classes: usize) -> Vec<ParamBlock> {
    let mut blocks = Vec::new();
    let mut offset = 0;
    let mut push = |name: &str, group, shape: Vec<usize>, fan_in| {
        let b = ParamBlock {
            name: name.into(),
            group,
            shape,
            offset,
            fan_in,
        };
        offset += b.len();
        blocks.push(b);
    };
    if cfg.architecture == Architecture::Cnn {
        let groups = [ParamGroup::Conv1, ParamGroup::Conv2, ParamGroup::Conv3];
        let mut cin = cfg.input_shape[0];
        for (k, (&cout, group)) in cfg.widths.iter().zip(groups).enumerate() {
            push(
                &format!("conv{}.w", k + 1),
                group,
                vec![cout, cin, 3, 3],
                cin * 9,
            );
            push(&format!("conv{}.b", k + 1), group, vec![cout], cin * 9);
            cin = cout;
        }
    }
    let feat = cfg.feature_dim();
    push(
        "embed.w",
        ParamGroup::Embed,
        vec![cfg.embed_dim, feat],
        feat,
    );
    push("embed.b", ParamGroup::Embed, vec![cfg.embed_dim], feat);
    push("head.w", ParamGroup::Head, vec![n_classes, feat], feat);
    push("head.b", ParamGroup::Head, vec![n_classes], feat);
    blocks
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub n_classes: usize,
    pub blocks: Vec<ParamBlock>,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Biases start at zero except the embedding bias, which is drawn like the
/// weights so the embedding stays defined when every feature is zero.
fn init_block(values: &mut [f64], block: &ParamBlock, rng: &mut ChaCha8Rng) {
    if block.is_bias() && block.group != ParamGroup::Embed {
        values[block.range()].fill(0.0);
        return;
    }
    let bound = INIT_GAIN / (block.fan_in as f64).sqrt();
    for v in &mut values[block.range()] {
        *v = rng.random_range(-bound..bound);
    }
}

impl ModelParams {
    /// Fan-in scaled uniform weights, zero biases, from a seeded generator.
    pub fn init(cfg: &ModelConfig, n_classes: usize, seed: u64) -> Result<Self, ModelError> {
        cfg.validate()?;
        if n_classes < 2 {
            return Err(ModelError::InvalidConfig(
                "need at least two classes".into(),
            ));
        }
        let blocks = param_layout(cfg, n_classes);
        let n = blocks.last().map_or(0, |b| b.offset + b.len());
        let mut values = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for b in &blocks {
            init_block(&mut values, b, &mut rng);
        }
        Ok(Self {
            config: cfg.clone(),
            n_classes,
            blocks,
            values,
            seed,
        })
    }

    /// Replaces the classifier head with a freshly initialized one for
    /// `n_classes` outputs; all other parameters are kept.
    pub fn reset_head(&mut self, n_classes: usize, seed: u64) {
        let blocks = param_layout(&self.config, n_classes);
        let mut values = vec![0.0; blocks.last().map_or(0, |b| b.offset + b.len())];
        for (new, old) in blocks.iter().zip(&self.blocks) {
            if new.group != ParamGroup::Head {
                values[new.range()].copy_from_slice(&self.values[old.range()]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for b in blocks.iter().filter(|b| b.group == ParamGroup::Head) {
            init_block(&mut values, b, &mut rng);
        }
        self.blocks = blocks;
        self.values = values;
        self.n_classes = n_classes;
    }

    pub fn block(&self, name: &str) -> Option<&ParamBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    fn slice(&self, name: &str) -> &[f64] {
        let b = self.block(name).expect("layout block");
        &self.values[b.range()]
    }

    /// Mask of trainable entries given frozen groups.
    pub fn trainable_mask(&self, frozen: &[ParamGroup]) -> Vec<bool> {
        let mut mask = vec![true; self.values.len()];
        for b in self.blocks.iter().filter(|b| frozen.contains(&b.group)) {
            mask[b.range()].fill(false);
        }
        mask
    }

    /// SHA-256 over the little-endian parameter bytes.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.values {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Logits and unit-norm embedding for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<f64>,
    pub embedding: Vec<f64>,
}

/// Intermediate values kept for the backward pass.
struct Trace {
    /// Post-ReLU output of each conv stage.
    acts: Vec<Vec<f64>>,
    feature: Vec<f64>,
    embed_norm: f64,
    out: ForwardOutput,
}

fn conv_forward(
    x: &[f64],
    (cin, h, w): (usize, usize, usize),
    weights: &[f64],
    bias: &[f64],
    (cout, ho, wo): (usize, usize, usize),
) -> Vec<f64> {
    let mut out = vec![0.0; cout * ho * wo];
    for co in 0..cout {
        let plane = &mut out[co * ho * wo..(co + 1) * ho * wo];
        plane.fill(bias[co]);
        for ci in 0..cin {
            let xin = &x[ci * h * w..(ci + 1) * h * w];
            for kh in 0..3 {
                let (oh0, oh1) = valid_range(kh, h, ho);
                for kw in 0..3 {
                    let wv = weights[((co * cin + ci) * 3 + kh) * 3 + kw];
                    let (ow0, ow1) = valid_range(kw, w, wo);
                    for oh in oh0..oh1 {
                        let row = &xin[(2 * oh + kh - 1) * w..];
                        let orow = &mut plane[oh * wo..(oh + 1) * wo];
                        for ow in ow0..ow1 {
                            orow[ow] += wv * row[2 * ow + kw - 1];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Output positions `o` whose input index `2o + k − 1` lies in `[0, n)`.
#[inline]
fn valid_range(k: usize, n: usize, n_out: usize) -> (usize, usize) {
    let lo = usize::from(k == 0);
    let hi = if n >= k {
        ((n - k) / 2 + 1).min(n_out)
    } else {
        0
    };
    (lo, hi.max(lo))
}

#[allow(clippy::too_many_arguments)]
fn conv_backward(
    x: &[f64],
    (cin, h, w): (usize, usize, usize),
    weights: &[f64],
    dout: &[f64],
    (cout, ho, wo): (usize, usize, usize),
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    for co in 0..cout {
        let g = &dout[co * ho * wo..(co + 1) * ho * wo];
        db[co] += g.iter().sum::<f64>();
        for ci in 0..cin {
            let xin = &x[ci * h * w..(ci + 1) * h * w];
            for kh in 0..3 {
                let (oh0, oh1) = valid_range(kh, h, ho);
                for kw in 0..3 {
                    let widx = ((co * cin + ci) * 3 + kh) * 3 + kw;
                    let wv = weights[widx];
                    let (ow0, ow1) = valid_range(kw, w, wo);
                    let mut acc = 0.0;
                    for oh in oh0..oh1 {
                        let base = (2 * oh + kh - 1) * w;
                        let grow = &g[oh * wo..(oh + 1) * wo];
                        for ow in ow0..ow1 {
                            acc += grow[ow] * xin[base + 2 * ow + kw - 1];
                        }
                        if let Some(dx) = dx.as_deref_mut() {
                            let drow = &mut dx[ci * h * w + base..];
                            for ow in ow0..ow1 {
                                drow[2 * ow + kw - 1] += wv * grow[ow];
                            }
                        }
                    }
                    dw[widx] += acc;
                }
            }
        }
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(r, &bias)| {
            bias + w[r * x.len()..(r + 1) * x.len()]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect()
}

fn forward_trace(p: &ModelParams, x: &[f64]) -> Result<Trace, ModelError> {
    let cfg = &p.config;
    if x.len() != cfg.input_len() {
        return Err(ModelError::ShapeMismatch {
            expected: cfg.input_len(),
            got: x.len(),
        });
    }
    let mut acts = Vec::new();
    let feature = match cfg.architecture {
        Architecture::LinearProbe => x.to_vec(),
        Architecture::Cnn => {
            let dims = cfg.dims();
            let mut cur = x.to_vec();
            for k in 0..3 {
                let mut z = conv_forward(
                    &cur,
                    dims[k],
                    p.slice(&format!("conv{}.w", k + 1)),
                    p.slice(&format!("conv{}.b", k + 1)),
                    dims[k + 1],
                );
                for v in &mut z {
                    *v = v.max(0.0);
                }
                acts.push(z.clone());
                cur = z;
            }
            let (c, h, w) = dims[3];
            let area = (h * w) as f64;
            (0..c)
                .map(|ch| cur[ch * h * w..(ch + 1) * h * w].iter().sum::<f64>() / area)
                .collect()
        }
    };
    let raw = affine(p.slice("embed.w"), p.slice("embed.b"), &feature);
    let embed_norm = raw
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(EMBED_NORM_FLOOR);
    let embedding = raw.iter().map(|v| v / embed_norm).collect();
    let logits = affine(p.slice("head.w"), p.slice("head.b"), &feature);
    Ok(Trace {
        acts,
        feature,
        embed_norm,
        out: ForwardOutput { logits, embedding },
    })
}

/// Gradient of one sample's contribution given `dL/dlogits` and
/// `dL/dembedding`, in the flat parameter layout.
fn backward(p: &ModelParams, x: &[f64], tr: &Trace, dlogits: &[f64], demb: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; p.values.len()];
    let feat = &tr.feature;
    let fd = feat.len();
    let mut dfeat = vec![0.0; fd];

    let hw = p.block("head.w").unwrap().clone();
    let hb = p.block("head.b").unwrap().clone();
    let head_w = &p.values[hw.range()];
    for (r, &g) in dlogits.iter().enumerate() {
        grad[hb.offset + r] += g;
        let row = &mut grad[hw.offset + r * fd..hw.offset + (r + 1) * fd];
        for (gw, &f) in row.iter_mut().zip(feat) {
            *gw += g * f;
        }
        for (d, &wv) in dfeat.iter_mut().zip(&head_w[r * fd..(r + 1) * fd]) {
            *d += g * wv;
        }
    }

    // e = u / ‖u‖  ⇒  du = (de − e·(e·de)) / ‖u‖
    let e = &tr.out.embedding;
    let dot: f64 = e.iter().zip(demb).map(|(a, b)| a * b).sum();
    let du: Vec<f64> = e
        .iter()
        .zip(demb)
        .map(|(&ei, &gi)| (gi - ei * dot) / tr.embed_norm)
        .collect();
    let ew = p.block("embed.w").unwrap().clone();
    let eb = p.block("embed.b").unwrap().clone();
    let embed_w = &p.values[ew.range()];
    for (r, &g) in du.iter().enumerate() {
        grad[eb.offset + r] += g;
        let row = &mut grad[ew.offset + r * fd..ew.offset + (r + 1) * fd];
        for (gw, &f) in row.iter_mut().zip(feat) {
            *gw += g * f;
        }
        for (d, &wv) in dfeat.iter_mut().zip(&embed_w[r * fd..(r + 1) * fd]) {
            *d += g * wv;
        }
    }

    if p.config.architecture == Architecture::Cnn {
        let dims = p.config.dims();
        let (c, h, w) = dims[3];
        let area = (h * w) as f64;
        let mut dact: Vec<f64> = (0..c)
            .flat_map(|ch| std::iter::repeat_n(dfeat[ch] / area, h * w))
            .collect();
        for k in (0..3).rev() {
            for (d, &a) in dact.iter_mut().zip(&tr.acts[k]) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            let input = if k == 0 { x } else { &tr.acts[k - 1] };
            let wb = p.block(&format!("conv{}.w", k + 1)).unwrap().clone();
            let bb = p.block(&format!("conv{}.b", k + 1)).unwrap().clone();
            let mut dw = vec![0.0; wb.len()];
            let mut db = vec![0.0; bb.len()];
            let (ci, hi, wi) = dims[k];
            let mut dx = if k > 0 {
                vec![0.0; ci * hi * wi]
            } else {
                Vec::new()
            };
            conv_backward(
                input,
                dims[k],
                &p.values[wb.range()],
                &dact,
                dims[k + 1],
                &mut dw,
                &mut db,
                if k > 0 { Some(&mut dx) } else { None },
            );
            grad[wb.range()].copy_from_slice(&dw);
            grad[bb.range()].copy_from_slice(&db);
            dact = dx;
        }
    }
    grad
}

/// Deterministic forward pass for one flattened input (`c × rows × frames`).
pub fn forward(p: &ModelParams, x: &[f64]) -> Result<ForwardOutput, ModelError> {
    forward_trace(p, x).map(|t| t.out)
}

/// Forward pass over a batch; row `i` equals `forward(p, xs[i])`.
pub fn forward_batch(p: &ModelParams, xs: &[&[f64]]) -> Result<Vec<ForwardOutput>, ModelError> {
    xs.par_iter().map(|x| forward(p, x)).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Class probabilities for one input.
pub fn predict_proba(p: &ModelParams, x: &[f64]) -> Result<Vec<f64>, ModelError> {
    Ok(softmax(&forward(p, x)?.logits))
}

/// Probability of the Fail class for a binary model.
pub fn predict_clip(p: &ModelParams, x: &[f64]) -> Result<f64, ModelError> {
    if p.n_classes != 2 {
        return Err(ModelError::InvalidConfig(format!(
            "binary prediction on a {}-class head",
            p.n_classes
        )));
    }
    Ok(predict_proba(p, x)?[crate::manifest::Label::Fail.index()])
}

/// Batch loss and its gradient with respect to every parameter.
/// Per-sample work runs in parallel; gradients are summed in batch order so
/// the result does not depend on the thread count.
pub fn loss_and_grad(
    p: &ModelParams,
    xs: &[&[f64]],
    labels: &[usize],
    weights: &[f64],
    lambda: f64,
    margin: f64,
) -> Result<(LossParts, Vec<f64>), ModelError> {
    let traces: Vec<Trace> = xs
        .par_iter()
        .map(|x| forward_trace(p, x))
        .collect::<Result<_, _>>()?;
    let logits: Vec<Vec<f64>> = traces.iter().map(|t| t.out.logits.clone()).collect();
    let embs: Vec<Vec<f64>> = traces.iter().map(|t| t.out.embedding.clone()).collect();
    let lg = hybrid_loss_grad(&logits, &embs, labels, weights, lambda, margin)?;
    let per_sample: Vec<Vec<f64>> = (0..xs.len())
        .into_par_iter()
        .map(|i| backward(p, xs[i], &traces[i], &lg.dlogits[i], &lg.dembeddings[i]))
        .collect();
    let mut grad = vec![0.0; p.values.len()];
    for g in per_sample {
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    Ok((lg.parts, grad))
}

/// Batch loss only.
pub fn batch_loss(
    p: &ModelParams,
    xs: &[&[f64]],
    labels: &[usize],
    weights: &[f64],
    lambda: f64,
    margin: f64,
) -> Result<LossParts, ModelError> {
    let outs = forward_batch(p, xs)?;
    let logits: Vec<Vec<f64>> = outs.iter().map(|o| o.logits.clone()).collect();
    let embs: Vec<Vec<f64>> = outs.into_iter().map(|o| o.embedding).collect();
    hybrid_loss(&logits, &embs, labels, weights, lambda, margin)
}
