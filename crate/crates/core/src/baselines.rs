//! Reference classifiers: logistic regression and exact k-nearest-neighbours.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{weighted_bce_with_logits, weighted_categorical_ce, ClassWeights};
use crate::model::{argmax, class_weights_for, Head, Weighting};
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogRegConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub weighting: Weighting,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.1,
            batch_size: 256,
            seed: 0,
            weighting: Weighting::Uniform,
        }
    }
}

/// Linear model over flattened features. Binary: one sigmoid output.
/// Multiclass: a softmax over one weight row per class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub head: Head,
    /// `[outputs, features]`
    pub weights: Tensor<f64>,
    pub bias: Tensor<f64>,
    pub trained: bool,
    /// Mean training loss after each epoch.
    pub loss_history: Vec<f64>,
}

/// Row-major `[N, D]` view of `[N, D, ...]` features.
fn flatten(features: &Tensor<f32>) -> Result<(usize, usize, Vec<f64>)> {
    if features.rank() < 2 {
        return Err(Error::shape("logreg", "rank", 2, features.rank()));
    }
    let n = features.shape()[0];
    let d = features.len() / n;
    Ok((n, d, features.data().iter().map(|&v| v as f64).collect()))
}

impl LogRegModel {
    pub fn zeros(head: Head, features: usize) -> Self {
        let out = head.width();
        Self {
            head,
            weights: Tensor::zeros(&[out, features]),
            bias: Tensor::zeros(&[out]),
            trained: false,
            loss_history: Vec::new(),
        }
    }

    pub fn features(&self) -> usize {
        self.weights.shape()[1]
    }

    fn logits(&self, x: &[f64], n: usize) -> Tensor<f64> {
        let (out, d) = (self.weights.shape()[0], self.features());
        let w = self.weights.data();
        let b = self.bias.data();
        Tensor::from_fn(&[n, out], |i| {
            let (row, o) = (i / out, i % out);
            let xr = &x[row * d..(row + 1) * d];
            b[o] + w[o * d..(o + 1) * d]
                .iter()
                .zip(xr)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
    }

    /// Weighted mean loss with gradients `(d_weights, d_bias)` for a batch of
    /// flattened rows.
    pub fn loss_and_grad(
        &self,
        x: &[f64],
        labels: &[u8],
        weights: &ClassWeights,
    ) -> Result<(f64, Tensor<f64>, Tensor<f64>)> {
        let n = labels.len();
        let d = self.features();
        if x.len() != n * d {
            return Err(Error::shape("logreg", "features", n * d, x.len()));
        }
        let logits = self.logits(x, n);
        let (loss, g) = match self.head {
            Head::Binary => weighted_bce_with_logits(&logits, labels, weights)?,
            Head::Multiclass => {
                let t: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
                weighted_categorical_ce(&logits, &t, weights)?
            }
        };
        let out = self.head.width();
        let mut gw = Tensor::<f64>::zeros(&[out, d]);
        let mut gb = Tensor::<f64>::zeros(&[out]);
        for (row, grow) in g.data().chunks_exact(out).enumerate() {
            let xr = &x[row * d..(row + 1) * d];
            for (o, &go) in grow.iter().enumerate() {
                gb.data_mut()[o] += go;
                for (acc, &xv) in gw.data_mut()[o * d..(o + 1) * d].iter_mut().zip(xr) {
                    *acc += go * xv;
                }
            }
        }
        Ok((loss, gw, gb))
    }

    pub fn predict_proba(&self, features: &Tensor<f32>) -> Result<Tensor<f64>> {
        let (n, d, x) = flatten(features)?;
        if d != self.features() {
            return Err(Error::shape("logreg", "features", self.features(), d));
        }
        let mut p = self.logits(&x, n);
        let out = self.head.width();
        for row in p.data_mut().chunks_exact_mut(out) {
            match self.head {
                Head::Binary => row[0] = crate::nn::sigmoid(row[0]),
                Head::Multiclass => crate::nn::softmax_row(row),
            }
        }
        Ok(p)
    }

    /// Binary: attack when `p >= 0.5`. Multiclass: argmax, ties to the lowest index.
    pub fn predict(&self, features: &Tensor<f32>) -> Result<Vec<u8>> {
        let p = self.predict_proba(features)?;
        let out = self.head.width();
        Ok(p.data()
            .chunks_exact(out)
            .map(|row| match self.head {
                Head::Binary => u8::from(row[0] >= 0.5),
                Head::Multiclass => argmax(row) as u8,
            })
            .collect())
    }
}

/// Mini-batch gradient descent on the (weighted) cross-entropy.
pub fn logreg_fit(
    features: &Tensor<f32>,
    labels: &[u8],
    head: Head,
    cfg: &LogRegConfig,
) -> Result<LogRegModel> {
    if cfg.epochs == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidConfig(
            "epochs and batch_size must be at least 1".into(),
        ));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning_rate {} must be positive",
            cfg.learning_rate
        )));
    }
    let (n, d, x) = flatten(features)?;
    if labels.len() != n {
        return Err(Error::shape("logreg_fit", "labels", n, labels.len()));
    }
    let weights = class_weights_for(labels, head.classes(), cfg.weighting)?;
    let mut model = LogRegModel::zeros(head, d);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut xb = Vec::with_capacity(cfg.batch_size * d);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, rows) in order.chunks(cfg.batch_size).enumerate() {
            xb.clear();
            for &r in rows {
                xb.extend_from_slice(&x[r * d..(r + 1) * d]);
            }
            let yb: Vec<u8> = rows.iter().map(|&r| labels[r]).collect();
            let (loss, gw, gb) = model.loss_and_grad(&xb, &yb, &weights)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: batch + 1,
                });
            }
            total += loss * rows.len() as f64;
            let lr = cfg.learning_rate;
            for (w, g) in model.weights.data_mut().iter_mut().zip(gw.data()) {
                *w -= lr * g;
            }
            for (b, g) in model.bias.data_mut().iter_mut().zip(gb.data()) {
                *b -= lr * g;
            }
        }
        model.loss_history.push(total / n as f64);
    }
    model.trained = true;
    Ok(model)
}

pub fn logreg_predict(model: &LogRegModel, features: &Tensor<f32>) -> Result<Vec<u8>> {
    model.predict(features)
}

/// Brute-force Euclidean k-NN over stored training rows.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnIndex {
    data: Vec<f32>,
    dims: usize,
    labels: Vec<u8>,
    classes: usize,
    k: usize,
}

pub const DEFAULT_K: usize = 5;

impl KnnIndex {
    pub fn build(features: &Tensor<f32>, labels: &[u8], classes: usize, k: usize) -> Result<Self> {
        if features.rank() < 2 {
            return Err(Error::shape("knn", "rank", 2, features.rank()));
        }
        let n = features.shape()[0];
        if labels.len() != n {
            return Err(Error::shape("knn", "labels", n, labels.len()));
        }
        if k == 0 || k > n {
            return Err(Error::InvalidConfig(format!(
                "k must be in [1, {n}], got {k}"
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y as usize >= classes) {
            return Err(Error::LabelOutOfRange {
                label: bad as usize,
                classes,
            });
        }
        Ok(Self {
            data: features.data().to_vec(),
            dims: features.len() / n,
            labels: labels.to_vec(),
            classes,
            k,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Indices of the `k` nearest stored rows, nearest first; equal distances
    /// order by index.
    pub fn neighbours(&self, query: &[f32]) -> Vec<usize> {
        let mut best: Vec<(f32, usize)> = Vec::with_capacity(self.k + 1);
        for (i, row) in self.data.chunks_exact(self.dims).enumerate() {
            let dist: f32 = row.iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == self.k && dist >= best[self.k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(d, _)| d <= dist);
            best.insert(pos, (dist, i));
            best.truncate(self.k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    /// Majority vote; ties go to the smallest class index.
    pub fn predict(&self, features: &Tensor<f32>) -> Result<Vec<u8>> {
        if self.is_empty() {
            return Err(Error::Empty("knn index"));
        }
        let n = features.shape()[0];
        let d = features.len() / n;
        if d != self.dims {
            return Err(Error::shape("knn", "features", self.dims, d));
        }
        Ok(features
            .data()
            .par_chunks_exact(d)
            .map(|q| {
                let mut votes = vec![0usize; self.classes];
                for i in self.neighbours(q) {
                    votes[self.labels[i] as usize] += 1;
                }
                argmax(&votes) as u8
            })
            .collect())
    }
}

pub fn knn_predict(index: &KnnIndex, features: &Tensor<f32>) -> Result<Vec<u8>> {
    index.predict(features)
}
