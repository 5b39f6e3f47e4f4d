//! The CNN-BiLSTM classifier: configuration, training, inference and files.

pub mod config;
pub mod format;
pub mod network;
pub mod train;

pub use config::{Head, ModelConfig};
pub use format::{
    decode_header, decode_model, encode_model, inspect, load, save, ManifestEntry, ModelHeader,
    MODEL_MAGIC, MODEL_VERSION,
};
pub use network::{param_count, ForwardCache, Network, PARAM_NAMES};
pub use train::{
    argmax, class_weights_for, evaluate_loss, fit, loss_and_grads, train, EpochRecord, TrainConfig,
    TrainingHistory, TrainingMetadata, Weighting, GRAD_CHUNK,
};

use crate::dataset::{binary_class_names, AttackCategory, EncodedDataset, EncoderState, RawTable};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A frozen network plus the encoder it was trained with. Immutable and safe
/// to share across threads for inference.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    network: Network<f32>,
    encoder: EncoderState,
    class_names: Vec<String>,
    metadata: TrainingMetadata,
}

impl TrainedModel {
    pub fn new(
        network: Network<f32>,
        encoder: EncoderState,
        metadata: TrainingMetadata,
    ) -> Result<Self> {
        let class_names = match network.head() {
            Head::Binary => binary_class_names(),
            Head::Multiclass => AttackCategory::names(),
        };
        Self::from_parts(network, encoder, class_names, metadata)
    }

    pub fn from_parts(
        network: Network<f32>,
        encoder: EncoderState,
        class_names: Vec<String>,
        metadata: TrainingMetadata,
    ) -> Result<Self> {
        if class_names.len() != network.head().classes() {
            return Err(Error::Header(format!(
                "{} class names for a {}-class head",
                class_names.len(),
                network.head().classes()
            )));
        }
        Ok(Self {
            network,
            encoder,
            class_names,
            metadata,
        })
    }

    pub fn network(&self) -> &Network<f32> {
        &self.network
    }

    pub fn head(&self) -> Head {
        self.network.head()
    }

    pub fn encoder(&self) -> &EncoderState {
        &self.encoder
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn metadata(&self) -> &TrainingMetadata {
        &self.metadata
    }

    pub fn param_count(&self) -> usize {
        self.network.param_count()
    }

    /// Encodes raw records with this model's fitted encoder.
    pub fn encode(&self, table: &RawTable) -> Result<Tensor<f32>> {
        self.encoder.transform_features(table)
    }

    /// Ensures a dataset was encoded with a compatible schema.
    pub fn check_dataset(&self, data: &EncodedDataset) -> Result<()> {
        train::check_encoder(&self.encoder, data.encoder())
    }
}

/// Sigmoid probabilities `[N, 1]` or softmax distributions `[N, 10]`.
pub fn predict_proba(model: &TrainedModel, features: &Tensor<f32>) -> Result<Tensor<f32>> {
    model.network.predict_proba(features)
}

/// Binary: attack when `p >= threshold`. Multiclass: argmax with ties to the
/// lowest index; the threshold is ignored.
pub fn predict_labels(
    model: &TrainedModel,
    features: &Tensor<f32>,
    threshold: f64,
) -> Result<Vec<u8>> {
    let probs = predict_proba(model, features)?;
    labels_from_proba(model.head(), &probs, threshold)
}

pub fn labels_from_proba(head: Head, probs: &Tensor<f32>, threshold: f64) -> Result<Vec<u8>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidConfig(format!(
            "threshold {threshold} must be in [0, 1]"
        )));
    }
    let width = head.width();
    if probs.rank() != 2 || probs.shape()[1] != width {
        return Err(Error::shape(
            "predict_labels",
            "classes",
            width,
            *probs.shape().last().unwrap_or(&0),
        ));
    }
    Ok(probs
        .data()
        .chunks_exact(width)
        .map(|row| match head {
            Head::Binary => u8::from(row[0] as f64 >= threshold),
            Head::Multiclass => argmax(row) as u8,
        })
        .collect())
}
