//! Cross-entropy losses with per-class weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Probability clamp applied before taking logarithms.
pub const PROB_EPS: f64 = 1e-7;

/// One positive multiplier per class, in label-index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::InvalidConfig(
                "class weights need at least two classes".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "class weights must be positive and finite: {weights:?}"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0; classes.max(2)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn get(&self, class: usize) -> Result<f64> {
        self.0.get(class).copied().ok_or(Error::LabelOutOfRange {
            label: class,
            classes: self.0.len(),
        })
    }
}

/// Balanced-class weights `w_c = N / (C · n_c)`, so the sample-weighted mean
/// weight over the training set is exactly one.
pub fn inverse_frequency_weights(class_counts: &[usize]) -> Result<ClassWeights> {
    if class_counts.len() < 2 {
        return Err(Error::InvalidConfig(
            "inverse-frequency weighting needs at least two classes".into(),
        ));
    }
    if let Some(index) = class_counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass { index });
    }
    let total: usize = class_counts.iter().sum();
    let c = class_counts.len() as f64;
    ClassWeights::new(
        class_counts
            .iter()
            .map(|&n| total as f64 / (c * n as f64))
            .collect(),
    )
}

fn check_batch<T: Real>(op: &'static str, t: &Tensor<T>, targets: usize) -> Result<()> {
    t.expect_rank(op, 2)?;
    if t.shape()[0] != targets {
        return Err(Error::shape(op, "batch", t.shape()[0], targets));
    }
    Ok(())
}

fn clamp_prob<T: Real>(p: T) -> T {
    let eps = T::lit(PROB_EPS);
    p.max(eps).min(T::one() - eps)
}

/// Unweighted binary cross-entropy over `[B, 1]` probabilities.
pub fn bce<T: Real>(prob: &Tensor<T>, targets: &[u8]) -> Result<(f64, Tensor<T>)> {
    check_batch("bce", prob, targets.len())?;
    let n = T::from_usize(targets.len()).expect("batch size");
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(targets.len());
    for (&p, &y) in prob.data().iter().zip(targets) {
        let p = clamp_prob(p);
        let (term, g) = if y == 1 {
            (p.ln(), -(T::one() / p))
        } else {
            ((T::one() - p).ln(), T::one() / (T::one() - p))
        };
        loss -= term.to_f64().unwrap_or(f64::NAN);
        grad.push(g / n);
    }
    Ok((
        loss / targets.len() as f64,
        Tensor::new(prob.shape().to_vec(), grad)?,
    ))
}

/// Binary cross-entropy with the per-sample term scaled by the weight of its
/// target class. Returns the batch-mean loss and its gradient with respect
/// to `prob`.
pub fn weighted_bce<T: Real>(
    prob: &Tensor<T>,
    targets: &[u8],
    weights: &ClassWeights,
) -> Result<(f64, Tensor<T>)> {
    check_batch("weighted_bce", prob, targets.len())?;
    if prob.shape()[1] != 1 {
        return Err(Error::shape("weighted_bce", "outputs", 1, prob.shape()[1]));
    }
    let n = T::from_usize(targets.len()).expect("batch size");
    let w = [T::lit(weights.get(0)?), T::lit(weights.get(1)?)];
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(targets.len());
    for (&p, &y) in prob.data().iter().zip(targets) {
        if y > 1 {
            return Err(Error::LabelOutOfRange {
                label: y as usize,
                classes: 2,
            });
        }
        let wy = w[y as usize];
        let p = clamp_prob(p);
        let (term, g) = if y == 1 {
            (p.ln(), -(T::one() / p))
        } else {
            ((T::one() - p).ln(), T::one() / (T::one() - p))
        };
        loss -= (wy * term).to_f64().unwrap_or(f64::NAN);
        grad.push(wy * g / n);
    }
    Ok((
        loss / targets.len() as f64,
        Tensor::new(prob.shape().to_vec(), grad)?,
    ))
}

/// [`weighted_bce`] evaluated on `sigmoid(logits)`, with the gradient taken
/// with respect to the logits: `w_y · (σ(z) − y) / B`. Unlike chaining through
/// the clamped probability, this gradient does not vanish when σ saturates.
pub fn weighted_bce_with_logits<T: Real>(
    logits: &Tensor<T>,
    targets: &[u8],
    weights: &ClassWeights,
) -> Result<(f64, Tensor<T>)> {
    let prob = logits.map(crate::nn::sigmoid);
    let (loss, _) = weighted_bce(&prob, targets, weights)?;
    let n = T::from_usize(targets.len()).expect("batch size");
    let w = [T::lit(weights.get(0)?), T::lit(weights.get(1)?)];
    let grad = prob
        .data()
        .iter()
        .zip(targets)
        .map(|(&p, &y)| w[y as usize] * (p - if y == 1 { T::one() } else { T::zero() }) / n)
        .collect();
    Ok((loss, Tensor::new(logits.shape().to_vec(), grad)?))
}

/// Unweighted softmax cross-entropy over `[B, C]` logits.
pub fn categorical_ce<T: Real>(logits: &Tensor<T>, targets: &[usize]) -> Result<(f64, Tensor<T>)> {
    check_batch("categorical_ce", logits, targets.len())?;
    let classes = logits.shape()[1];
    let n = T::from_usize(targets.len()).expect("batch size");
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &y) in logits.data().chunks_exact(classes).zip(targets) {
        if y >= classes {
            return Err(Error::LabelOutOfRange { label: y, classes });
        }
        let (nll, probs) = nll_row(row, y);
        loss += nll.to_f64().unwrap_or(f64::NAN);
        grad.extend(
            probs
                .iter()
                .enumerate()
                .map(|(c, &p)| (p - onehot::<T>(c, y)) / n),
        );
    }
    Ok((
        loss / targets.len() as f64,
        Tensor::new(logits.shape().to_vec(), grad)?,
    ))
}

/// Softmax cross-entropy with each sample scaled by the weight of its target
/// class; gradient `w_y · (softmax − onehot) / B`.
pub fn weighted_categorical_ce<T: Real>(
    logits: &Tensor<T>,
    targets: &[usize],
    weights: &ClassWeights,
) -> Result<(f64, Tensor<T>)> {
    check_batch("weighted_categorical_ce", logits, targets.len())?;
    let classes = logits.shape()[1];
    if classes < 2 {
        return Err(Error::InvalidConfig(
            "categorical loss needs at least two classes".into(),
        ));
    }
    if weights.len() != classes {
        return Err(Error::shape(
            "weighted_categorical_ce",
            "class weights",
            classes,
            weights.len(),
        ));
    }
    let n = T::from_usize(targets.len()).expect("batch size");
    let mut loss = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (row, &y) in logits.data().chunks_exact(classes).zip(targets) {
        if y >= classes {
            return Err(Error::LabelOutOfRange { label: y, classes });
        }
        let wy = T::lit(weights.get(y)?);
        let (nll, probs) = nll_row(row, y);
        loss += (wy * nll).to_f64().unwrap_or(f64::NAN);
        grad.extend(
            probs
                .iter()
                .enumerate()
                .map(|(c, &p)| wy * (p - onehot::<T>(c, y)) / n),
        );
    }
    Ok((
        loss / targets.len() as f64,
        Tensor::new(logits.shape().to_vec(), grad)?,
    ))
}

fn onehot<T: Real>(c: usize, y: usize) -> T {
    if c == y {
        T::one()
    } else {
        T::zero()
    }
}

/// Negative log-likelihood of `y` under softmax(row), plus the softmax itself.
fn nll_row<T: Real>(row: &[T], y: usize) -> (T, Vec<T>) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = row.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    let lse = max + sum.ln();
    (lse - row[y], exps.iter().map(|&e| e / sum).collect())
}
