//! Vocabulary encoding and min-max scaling fitted on training records.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dataset::raw::{Column, RawTable};
use crate::dataset::schema::{FeatureSchema, NUM_FEATURES};
use crate::dataset::{EncodedDataset, Provenance};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A numeric feature gets a `log1p` transform when it is non-negative and its
/// maximum exceeds this multiple of `max(median, 1)`.
pub const HEAVY_TAIL_RATIO: f64 = 1000.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureEncoder {
    /// `vocab[i]` maps to index `i + 1`; index 0 is reserved for unseen values.
    /// Indices are scaled by the vocabulary size.
    Categorical {
        vocab: Vec<String>,
    },
    Numeric {
        min: f64,
        max: f64,
        log: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    pub schema: FeatureSchema,
    pub features: Vec<FeatureEncoder>,
}

impl EncoderState {
    pub fn fit(train: &RawTable) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("encoder fitting requires training records"));
        }
        let features = train
            .columns
            .iter()
            .map(|col| match col {
                Column::Categorical(values) => fit_vocab(values),
                Column::Numeric(values) => fit_numeric(values),
            })
            .collect();
        Ok(Self {
            schema: FeatureSchema::unsw_nb15(),
            features,
        })
    }

    /// Index assigned to a categorical value, 0 when unseen.
    pub fn category_index(&self, feature: usize, value: &str) -> Option<usize> {
        match &self.features[feature] {
            FeatureEncoder::Categorical { vocab } => {
                Some(vocab.iter().position(|v| v == value).map_or(0, |i| i + 1))
            }
            FeatureEncoder::Numeric { .. } => None,
        }
    }

    /// Encodes feature columns into `[N, 42, 1]` values in `[0, 1]`.
    pub fn transform_features(&self, table: &RawTable) -> Result<Tensor<f32>> {
        if self.features.len() != NUM_FEATURES || table.columns.len() != NUM_FEATURES {
            return Err(Error::shape(
                "transform",
                "features",
                NUM_FEATURES,
                table.columns.len(),
            ));
        }
        let n = table.len();
        if n == 0 {
            return Err(Error::Empty("transform input"));
        }
        let mut out = vec![0f32; n * NUM_FEATURES];
        for (j, (enc, col)) in self.features.iter().zip(&table.columns).enumerate() {
            match (enc, col) {
                (FeatureEncoder::Categorical { vocab }, Column::Categorical(values)) => {
                    let lookup: HashMap<&str, usize> = vocab
                        .iter()
                        .enumerate()
                        .map(|(i, v)| (v.as_str(), i + 1))
                        .collect();
                    let scale = vocab.len().max(1) as f64;
                    for (r, v) in values.iter().enumerate() {
                        let idx = lookup.get(v.as_str()).copied().unwrap_or(0);
                        out[r * NUM_FEATURES + j] = (idx as f64 / scale) as f32;
                    }
                }
                (&FeatureEncoder::Numeric { min, max, log }, Column::Numeric(values)) => {
                    for (r, &v) in values.iter().enumerate() {
                        out[r * NUM_FEATURES + j] = scale_numeric(v, min, max, log) as f32;
                    }
                }
                _ => {
                    return Err(Error::Dataset(format!(
                        "feature `{}` kind disagrees with the encoder",
                        self.schema.features[j].name
                    )))
                }
            }
        }
        Tensor::new(vec![n, NUM_FEATURES, 1], out)
    }

    pub fn transform(&self, table: &RawTable, provenance: Provenance) -> Result<EncodedDataset> {
        let labels = table.labels()?;
        let features = self.transform_features(table)?;
        EncodedDataset::new(
            features,
            labels.label.clone(),
            labels.category.iter().map(|c| c.index() as u8).collect(),
            provenance,
            self.clone(),
        )
    }
}

fn scale_numeric(v: f64, min: f64, max: f64, log: bool) -> f64 {
    if max <= min {
        return 0.0;
    }
    let x = if log { v.max(0.0).ln_1p() } else { v };
    ((x - min) / (max - min)).clamp(0.0, 1.0)
}

fn fit_vocab(values: &[String]) -> FeatureEncoder {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for v in values {
        *counts.entry(v.as_str()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // descending frequency, ties in lexical order
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    FeatureEncoder::Categorical {
        vocab: ranked.into_iter().map(|(v, _)| v.to_string()).collect(),
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, hi, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let hi = *hi;
    if n % 2 == 1 {
        hi
    } else {
        let lo = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo + hi) / 2.0
    }
}

fn fit_numeric(values: &[f64]) -> FeatureEncoder {
    let raw_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let raw_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log = raw_min >= 0.0 && raw_max / median(values).max(1.0) > HEAVY_TAIL_RATIO;
    let (min, max) = if log {
        (raw_min.ln_1p(), raw_max.ln_1p())
    } else {
        (raw_min, raw_max)
    };
    FeatureEncoder::Numeric { min, max, log }
}
