//! Mini-batch Adam training with weighted losses.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{counts, stratified_partition_lenient, EncodedDataset, EncoderState};
use crate::error::{Error, Result};
use crate::loss::{
    inverse_frequency_weights, weighted_bce_with_logits, weighted_categorical_ce, ClassWeights,
};
use crate::model::config::Head;
use crate::model::network::Network;
use crate::model::TrainedModel;
use crate::optim::{Adam, AdamConfig};
use crate::tensor::{Real, Tensor};

/// Rows per gradient work unit. Partial gradients are always formed over the
/// same row groups, so results do not depend on the worker count.
pub const GRAD_CHUNK: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    #[default]
    Uniform,
    InverseFrequency,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "inverse-frequency" => Ok(Weighting::InverseFrequency),
            other => Err(Error::InvalidConfig(format!(
                "unknown weighting `{other}` (expected uniform or inverse-frequency)"
            ))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::InverseFrequency => "inverse-frequency",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub weighting: Weighting,
    /// Sum partial gradients in a fixed order.
    pub deterministic: bool,
    /// Fraction of the training set held out for per-epoch validation.
    pub validation_fraction: f64,
    /// Worker cap; `None` uses the ambient rayon pool.
    pub threads: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::binary()
    }
}

impl TrainConfig {
    pub fn binary() -> Self {
        Self {
            epochs: 15,
            batch_size: 256,
            learning_rate: 1e-3,
            seed: 0,
            weighting: Weighting::Uniform,
            deterministic: false,
            validation_fraction: 0.1,
            threads: None,
        }
    }

    pub fn multiclass() -> Self {
        Self {
            epochs: 30,
            weighting: Weighting::InverseFrequency,
            ..Self::binary()
        }
    }

    pub fn for_head(head: Head) -> Self {
        match head {
            Head::Binary => Self::binary(),
            Head::Multiclass => Self::multiclass(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidConfig(format!(
                "validation_fraction {} must be in [0, 1)",
                self.validation_fraction
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub class_weights: Vec<f64>,
    pub train_seconds: f64,
}

/// Reproducibility record stored alongside the weights. Holds no wall-clock
/// values so identical runs serialize identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weighting: Weighting,
    pub class_weights: Vec<f64>,
    pub train_rows: usize,
    pub final_train_loss: f64,
    pub final_val_loss: Option<f64>,
}

/// Class weights for a label vector under the chosen policy.
pub fn class_weights_for(
    labels: &[u8],
    classes: usize,
    weighting: Weighting,
) -> Result<ClassWeights> {
    match weighting {
        Weighting::Uniform => Ok(ClassWeights::uniform(classes)),
        Weighting::InverseFrequency => inverse_frequency_weights(&counts(labels, classes)),
    }
}

/// Weighted loss and parameter gradients for one batch. `norm` is the
/// divisor of the batch mean, which lets a batch be split into chunks whose
/// gradients add up to the full-batch gradient.
pub fn loss_and_grads<T: Real>(
    net: &Network<T>,
    x: &Tensor<T>,
    labels: &[u8],
    weights: &ClassWeights,
    dropout_mask: Option<Vec<T>>,
    norm: usize,
) -> Result<(f64, Vec<Tensor<T>>)> {
    let (logits, cache) = net.forward(x, dropout_mask)?;
    let (loss, mut grad) = head_loss(net.head(), &logits, labels, weights)?;
    let n = labels.len();
    let scale = T::from_usize(n).expect("rows") / T::from_usize(norm).expect("rows");
    grad.data_mut().iter_mut().for_each(|g| *g *= scale);
    let grads = net.backward(&grad, Some(&cache))?;
    Ok((loss * n as f64 / norm as f64, grads))
}

pub(crate) fn head_loss<T: Real>(
    head: Head,
    logits: &Tensor<T>,
    labels: &[u8],
    weights: &ClassWeights,
) -> Result<(f64, Tensor<T>)> {
    match head {
        Head::Binary => weighted_bce_with_logits(logits, labels, weights),
        Head::Multiclass => {
            let targets: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
            weighted_categorical_ce(logits, &targets, weights)
        }
    }
}

fn batch_gradients(
    net: &Network<f32>,
    x: &Tensor<f32>,
    labels: &[u8],
    weights: &ClassWeights,
    mask: Option<Vec<f32>>,
    deterministic: bool,
) -> Result<(f64, Vec<Tensor<f32>>)> {
    let n = labels.len();
    let width = 2 * net.config().hidden;
    let starts: Vec<usize> = (0..n).step_by(GRAD_CHUNK).collect();
    let work = |&s: &usize| -> Result<(f64, Vec<Tensor<f32>>)> {
        let e = (s + GRAD_CHUNK).min(n);
        let m = mask.as_ref().map(|m| m[s * width..e * width].to_vec());
        loss_and_grads(net, &x.slice_outer(s, e), &labels[s..e], weights, m, n)
    };
    let sum = |(la, mut ga): (f64, Vec<Tensor<f32>>), (lb, gb): (f64, Vec<Tensor<f32>>)| {
        for (a, b) in ga.iter_mut().zip(&gb) {
            a.add_assign(b);
        }
        (la + lb, ga)
    };
    if deterministic {
        let parts: Vec<(f64, Vec<Tensor<f32>>)> =
            starts.par_iter().map(work).collect::<Result<_>>()?;
        let mut it = parts.into_iter();
        let first = it.next().ok_or(Error::Empty("training batch"))?;
        Ok(it.fold(first, sum))
    } else {
        starts
            .par_iter()
            .map(work)
            .try_reduce_with(|a, b| Ok(sum(a, b)))
            .ok_or(Error::Empty("training batch"))?
    }
}

/// Mean weighted loss and accuracy over a dataset, without dropout.
pub fn evaluate_loss(
    net: &Network<f32>,
    features: &Tensor<f32>,
    labels: &[u8],
    weights: &ClassWeights,
) -> Result<(f64, f64)> {
    let probs = net.predict_proba(features)?;
    let head = net.head();
    let n = labels.len();
    let mut loss = 0.0;
    let mut correct = 0usize;
    let w = head.width();
    // logits are not kept by inference, so recompute the loss from probabilities
    for (row, &y) in probs.data().chunks_exact(w).zip(labels) {
        let wy = weights.as_slice()[y as usize];
        let eps = crate::loss::PROB_EPS;
        let p_true = match head {
            Head::Binary => {
                let p = row[0] as f64;
                if y == 1 {
                    p
                } else {
                    1.0 - p
                }
            }
            Head::Multiclass => row[y as usize] as f64,
        };
        loss -= wy * p_true.clamp(eps, 1.0 - eps).ln();
        let pred = match head {
            Head::Binary => u8::from(row[0] >= 0.5),
            Head::Multiclass => argmax(row) as u8,
        };
        correct += usize::from(pred == y);
    }
    Ok((loss / n as f64, correct as f64 / n as f64))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Trains `network` on `train` and freezes the result.
pub fn fit(
    network: Network<f32>,
    train: &EncodedDataset,
    cfg: &TrainConfig,
) -> Result<(TrainedModel, TrainingHistory)> {
    cfg.validate()?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(|| fit_inner(network, train, cfg)),
        None => fit_inner(network, train, cfg),
    }
}

fn fit_inner(
    mut net: Network<f32>,
    data: &EncodedDataset,
    cfg: &TrainConfig,
) -> Result<(TrainedModel, TrainingHistory)> {
    let started = Instant::now();
    let head = net.head();
    let classes = head.classes();
    let view = head.label_view();

    let (train_rows, val_rows) = if cfg.validation_fraction > 0.0 {
        stratified_partition_lenient(
            data.labels(view),
            classes,
            cfg.validation_fraction,
            cfg.seed,
        )?
    } else {
        ((0..data.len()).collect(), Vec::new())
    };
    let x_all = data.features();
    let y_all = data.labels(view);
    let y_train: Vec<u8> = train_rows.iter().map(|&r| y_all[r]).collect();
    let weights = class_weights_for(&y_train, classes, cfg.weighting)?;
    let val = if val_rows.is_empty() {
        None
    } else {
        Some((
            x_all.select_outer(&val_rows),
            val_rows.iter().map(|&r| y_all[r]).collect::<Vec<u8>>(),
        ))
    };

    let mut adam = Adam::new(
        AdamConfig {
            lr: cfg.learning_rate,
            ..AdamConfig::default()
        },
        &net.params(),
    );
    let mut order_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    order_rng.set_stream(1);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(2);
    let keep = 1.0 - net.config().dropout;
    let width = 2 * net.config().hidden;

    let mut history = TrainingHistory {
        class_weights: weights.as_slice().to_vec(),
        ..Default::default()
    };
    let mut order = train_rows.clone();
    for epoch in 1..=cfg.epochs {
        let epoch_start = Instant::now();
        order.shuffle(&mut order_rng);
        let mut loss_sum = 0.0;
        for (batch_idx, rows) in order.chunks(cfg.batch_size).enumerate() {
            let x = x_all.select_outer(rows);
            let y: Vec<u8> = rows.iter().map(|&r| y_all[r]).collect();
            let mask = (keep < 1.0).then(|| {
                (0..rows.len() * width)
                    .map(|_| {
                        if dropout_rng.gen::<f64>() < keep {
                            (1.0 / keep) as f32
                        } else {
                            0.0
                        }
                    })
                    .collect()
            });
            let (loss, grads) = batch_gradients(&net, &x, &y, &weights, mask, cfg.deterministic)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.all_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch_idx + 1,
                });
            }
            adam.step(&mut net.params_mut(), &grads)?;
            loss_sum += loss * rows.len() as f64;
        }
        let (val_loss, val_accuracy) = match &val {
            Some((vx, vy)) => {
                let (l, a) = evaluate_loss(&net, vx, vy, &weights)?;
                (Some(l), Some(a))
            }
            None => (None, None),
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / order.len() as f64,
            val_loss,
            val_accuracy,
            seconds: epoch_start.elapsed().as_secs_f64(),
        });
    }
    history.train_seconds = started.elapsed().as_secs_f64();
    let last = history.epochs.last().expect("at least one epoch");
    let metadata = TrainingMetadata {
        seed: cfg.seed,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        learning_rate: cfg.learning_rate,
        weighting: cfg.weighting,
        class_weights: weights.as_slice().to_vec(),
        train_rows: train_rows.len(),
        final_train_loss: last.train_loss,
        final_val_loss: last.val_loss,
    };
    let model = TrainedModel::new(net, data.encoder().clone(), metadata)?;
    Ok((model, history))
}

/// Fits a freshly built network: convenience for `build` + `fit`.
pub fn train(
    config: &crate::model::ModelConfig,
    data: &EncodedDataset,
    cfg: &TrainConfig,
) -> Result<(TrainedModel, TrainingHistory)> {
    let net = Network::build(config, cfg.seed)?;
    fit(net, data, cfg)
}

pub(crate) fn check_encoder(model: &EncoderState, data: &EncoderState) -> Result<()> {
    if model.schema != data.schema {
        return Err(Error::SchemaMismatch {
            model: model.schema.to_string(),
            data: data.schema.to_string(),
        });
    }
    Ok(())
}
