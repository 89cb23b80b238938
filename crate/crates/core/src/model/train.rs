//! Staged training: each stage names a dataset, its own optimizer settings
//! and a set of frozen parameter groups. Parameters carry over between
//! stages; Adam moments are reset at every stage boundary, and the
//! classifier head is re-initialized whenever the class count changes.

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    adam_step_masked, batch_loss, class_weights, loss_and_grad, predict_proba, AdamState,
    ModelConfig, ModelError, ModelParams, ParamGroup,
};

/// Flattened inputs with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    #[default]
    InverseFrequency,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageConfig {
    pub dataset_id: String,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub lambda: f64,
    pub margin: f64,
    pub freeze: Vec<ParamGroup>,
    pub validation_dataset_id: Option<String>,
}

impl Default for StageConfig {
    fn default() -> Self {
        Self {
            dataset_id: "train".into(),
            epochs: 20,
            learning_rate: 1e-3,
            batch_size: 16,
            lambda: 0.5,
            margin: 1.0,
            freeze: Vec::new(),
            validation_dataset_id: None,
        }
    }
}

impl StageConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad(format!("lambda {} outside [0, 1]", self.lambda));
        }
        if !(self.margin > 0.0) {
            return bad(format!("margin {} must be positive", self.margin));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub stages: Vec<StageConfig>,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            stages: vec![StageConfig::default()],
            seed: 42,
            class_weighting: ClassWeighting::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationLog {
    pub dataset_id: String,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub stage: usize,
    pub dataset_id: String,
    pub n_classes: usize,
    pub head_reinitialized: bool,
    pub class_weights: Vec<f64>,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
    pub initial_param_hash: String,
    pub final_param_hash: String,
    pub validation: Option<ValidationLog>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub stages: Vec<StageLog>,
}

/// Splits `order` into batches of `size`; a trailing batch of one is folded
/// into its predecessor so every batch can form contrastive pairs.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = (out.len() - 1) * size;
        *out.last_mut().unwrap() = &order[start..];
    }
    out
}

fn gather<'a>(ds: &'a Dataset, idx: &[usize]) -> (Vec<&'a [f64]>, Vec<usize>) {
    (
        idx.iter().map(|&i| ds.inputs[i].as_slice()).collect(),
        idx.iter().map(|&i| ds.labels[i]).collect(),
    )
}

/// Mean batch loss over the dataset in its stored order, plus accuracy.
pub fn evaluate_dataset(
    p: &ModelParams,
    ds: &Dataset,
    weights: &[f64],
    lambda: f64,
    margin: f64,
    batch_size: usize,
) -> Result<(f64, f64), ModelError> {
    if ds.is_empty() {
        return Err(ModelError::EmptyDataset(ds.id.clone()));
    }
    let order: Vec<usize> = (0..ds.len()).collect();
    let bs = batches(&order, batch_size.max(1));
    let mut total = 0.0;
    for b in &bs {
        let (xs, ys) = gather(ds, b);
        total += batch_loss(p, &xs, &ys, weights, lambda, margin)?.total;
    }
    let correct = ds
        .inputs
        .iter()
        .zip(&ds.labels)
        .map(|(x, &y)| {
            let probs = predict_proba(p, x)?;
            let arg = probs
                .iter()
                .enumerate()
                .fold(0, |best, (c, &v)| if v > probs[best] { c } else { best });
            Ok(usize::from(arg == y))
        })
        .sum::<Result<usize, ModelError>>()?;
    Ok((total / bs.len() as f64, correct as f64 / ds.len() as f64))
}

fn find<'a>(datasets: &'a [Dataset], id: &str) -> Result<&'a Dataset, ModelError> {
    datasets
        .iter()
        .find(|d| d.id == id)
        .ok_or_else(|| ModelError::UnknownDataset(id.into()))
}

/// Initializes parameters for the first stage's class count and trains.
pub fn train(
    datasets: &[Dataset],
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog), ModelError> {
    let first = cfg
        .stages
        .first()
        .ok_or_else(|| ModelError::InvalidConfig("no training stages".into()))?;
    let n_classes = find(datasets, &first.dataset_id)?.n_classes;
    let params = ModelParams::init(model, n_classes, cfg.seed)?;
    train_from(params, datasets, cfg)
}

/// Runs every stage of `cfg` in order starting from `params`.
pub fn train_from(
    mut params: ModelParams,
    datasets: &[Dataset],
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainLog), ModelError> {
    let mut log = TrainLog::default();
    for (si, stage) in cfg.stages.iter().enumerate() {
        stage.validate()?;
        let ds = find(datasets, &stage.dataset_id)?;
        if ds.is_empty() {
            return Err(ModelError::EmptyDataset(ds.id.clone()));
        }
        if ds.labels.iter().any(|&y| y >= ds.n_classes) {
            return Err(ModelError::InvalidConfig(format!(
                "dataset {:?} has labels outside its {} classes",
                ds.id, ds.n_classes
            )));
        }
        if stage.lambda < 1.0 && ds.len() < 2 {
            return Err(ModelError::DegenerateBatch(ds.len()));
        }
        let head_reinitialized = ds.n_classes != params.n_classes;
        if head_reinitialized {
            params.reset_head(ds.n_classes, cfg.seed.wrapping_add(1 + si as u64));
        }
        let weights = match cfg.class_weighting {
            ClassWeighting::InverseFrequency => class_weights(&ds.class_counts())?,
            ClassWeighting::Uniform => vec![1.0; ds.n_classes],
        };
        let trainable = params.trainable_mask(&stage.freeze);
        let initial_param_hash = params.hash();
        let (initial_loss, _) = evaluate_dataset(
            &params,
            ds,
            &weights,
            stage.lambda,
            stage.margin,
            stage.batch_size,
        )?;

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(si as u64 + 1);
        let mut adam = AdamState::new(params.values.len());
        let mut order: Vec<usize> = (0..ds.len()).collect();
        let mut epoch_losses = Vec::with_capacity(stage.epochs);
        for epoch in 0..stage.epochs {
            order.shuffle(&mut rng);
            let bs = batches(&order, stage.batch_size);
            let mut sum = 0.0;
            for b in &bs {
                let (xs, ys) = gather(ds, b);
                let (parts, grad) =
                    loss_and_grad(&params, &xs, &ys, &weights, stage.lambda, stage.margin)?;
                adam_step_masked(
                    &mut params.values,
                    &grad,
                    &mut adam,
                    stage.learning_rate,
                    &trainable,
                )?;
                if !params.all_finite() {
                    return Err(ModelError::NonFiniteParams(adam.t));
                }
                sum += parts.total;
            }
            let mean = sum / bs.len() as f64;
            debug!("stage {si} epoch {epoch}: loss {mean:.6}");
            epoch_losses.push(mean);
        }
        let (final_loss, accuracy) = evaluate_dataset(
            &params,
            ds,
            &weights,
            stage.lambda,
            stage.margin,
            stage.batch_size,
        )?;
        info!(
            "stage {si} ({}): loss {initial_loss:.4} -> {final_loss:.4}, train accuracy {accuracy:.3}",
            ds.id
        );
        let validation = match &stage.validation_dataset_id {
            None => None,
            Some(id) => {
                let vd = find(datasets, id)?;
                let (loss, accuracy) =
                    evaluate_dataset(&params, vd, &weights, 1.0, stage.margin, stage.batch_size)?;
                Some(ValidationLog {
                    dataset_id: id.clone(),
                    loss,
                    accuracy,
                })
            }
        };
        log.stages.push(StageLog {
            stage: si,
            dataset_id: ds.id.clone(),
            n_classes: ds.n_classes,
            head_reinitialized,
            class_weights: weights,
            initial_loss,
            final_loss,
            epoch_losses,
            steps: adam.t,
            initial_param_hash,
            final_param_hash: params.hash(),
            validation,
        });
    }
    Ok((params, log))
}
