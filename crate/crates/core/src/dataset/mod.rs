//! UNSW-NB15 ingestion, encoding, splitting and caching.

pub mod cache;
pub mod encode;
pub mod raw;
pub mod schema;
pub mod split;
pub mod synth;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use cache::{read_cache, write_cache};
pub use encode::{EncoderState, FeatureEncoder};
pub use raw::{load_csv, load_csv_features, Column, RawLabels, RawTable};
pub use schema::{
    binary_class_names, AttackCategory, FeatureKind, FeatureSchema, FeatureSpec, NUM_CLASSES,
    NUM_FEATURES,
};
pub use split::{split_encoded, split_tables, DataSplit, SplitPolicy};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Where an encoded dataset came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    OfficialTrain,
    OfficialTest,
    Derived { description: String },
}

impl Provenance {
    pub fn derived(description: impl Into<String>) -> Self {
        Provenance::Derived {
            description: description.into(),
        }
    }
}

/// Which label column to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelView {
    Binary,
    Multiclass,
}

impl LabelView {
    pub fn classes(self) -> usize {
        match self {
            LabelView::Binary => 2,
            LabelView::Multiclass => NUM_CLASSES,
        }
    }
}

/// Encoded flow records: features `[N, 42, 1]` in `[0, 1]` plus both label
/// views. Class index 0 is always "Normal".
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDataset {
    features: Tensor<f32>,
    binary: Vec<u8>,
    multiclass: Vec<u8>,
    provenance: Provenance,
    encoder: EncoderState,
}

impl EncodedDataset {
    pub fn new(
        features: Tensor<f32>,
        binary: Vec<u8>,
        multiclass: Vec<u8>,
        provenance: Provenance,
        encoder: EncoderState,
    ) -> Result<Self> {
        let n = binary.len();
        if n == 0 {
            return Err(Error::Empty("encoded dataset"));
        }
        if features.shape() != [n, NUM_FEATURES, 1] || multiclass.len() != n {
            return Err(Error::Dataset(format!(
                "features {:?}, {} binary labels and {} multiclass labels disagree",
                features.shape(),
                n,
                multiclass.len()
            )));
        }
        if let Some(&bad) = binary.iter().find(|&&y| y > 1) {
            return Err(Error::LabelOutOfRange {
                label: bad as usize,
                classes: 2,
            });
        }
        if let Some(&bad) = multiclass.iter().find(|&&y| y as usize >= NUM_CLASSES) {
            return Err(Error::LabelOutOfRange {
                label: bad as usize,
                classes: NUM_CLASSES,
            });
        }
        Ok(Self {
            features,
            binary,
            multiclass,
            provenance,
            encoder,
        })
    }

    pub fn len(&self) -> usize {
        self.binary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.binary.is_empty()
    }

    pub fn features(&self) -> &Tensor<f32> {
        &self.features
    }

    pub fn binary_labels(&self) -> &[u8] {
        &self.binary
    }

    pub fn multiclass_labels(&self) -> &[u8] {
        &self.multiclass
    }

    pub fn labels(&self, view: LabelView) -> &[u8] {
        match view {
            LabelView::Binary => &self.binary,
            LabelView::Multiclass => &self.multiclass,
        }
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn encoder(&self) -> &EncoderState {
        &self.encoder
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn select(&self, rows: &[usize], provenance: Provenance) -> Result<Self> {
        Self::new(
            self.features.select_outer(rows),
            rows.iter().map(|&r| self.binary[r]).collect(),
            rows.iter().map(|&r| self.multiclass[r]).collect(),
            provenance,
            self.encoder.clone(),
        )
    }

    /// Concatenates datasets encoded with the same encoder state.
    pub fn concat(parts: &[&EncodedDataset], provenance: Provenance) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("dataset concatenation"))?;
        if parts.iter().any(|p| p.encoder != first.encoder) {
            return Err(Error::Dataset(
                "cannot concatenate datasets with different encoders".into(),
            ));
        }
        let feats: Vec<&Tensor<f32>> = parts.iter().map(|p| &p.features).collect();
        Self::new(
            Tensor::concat_outer(&feats)?,
            parts
                .iter()
                .flat_map(|p| p.binary.iter().copied())
                .collect(),
            parts
                .iter()
                .flat_map(|p| p.multiclass.iter().copied())
                .collect(),
            provenance,
            first.encoder.clone(),
        )
    }
}

/// Per-class record counts for the chosen label view.
pub fn class_distribution(dataset: &EncodedDataset, view: LabelView) -> Vec<usize> {
    counts(dataset.labels(view), view.classes())
}

pub(crate) fn counts(labels: &[u8], classes: usize) -> Vec<usize> {
    let mut c = vec![0usize; classes];
    for &y in labels {
        c[y as usize] += 1;
    }
    c
}

fn check_fraction(fraction: f64, allow_one: bool) -> Result<()> {
    let ok = fraction > 0.0 && (fraction < 1.0 || (allow_one && fraction == 1.0));
    if !ok {
        return Err(Error::InvalidConfig(format!(
            "fraction {fraction} out of range"
        )));
    }
    Ok(())
}

fn group_by_class(labels: &[u8], classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); classes];
    for (i, &y) in labels.iter().enumerate() {
        groups[y as usize].push(i);
    }
    groups
}

/// Stratified partition of row indices into `(train, test)`.
///
/// Every present class contributes `round(n_c · fraction)` test rows, clamped
/// to `[1, n_c − 1]` so both sides see every class. Both index lists are
/// returned in ascending order.
pub fn stratified_partition(
    labels: &[u8],
    classes: usize,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    partition(labels, classes, fraction, seed, true)
}

/// Like [`stratified_partition`], but classes with a single record go to the
/// training side instead of failing.
pub fn stratified_partition_lenient(
    labels: &[u8],
    classes: usize,
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    partition(labels, classes, fraction, seed, false)
}

fn partition(
    labels: &[u8],
    classes: usize,
    fraction: f64,
    seed: u64,
    strict: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_fraction(fraction, false)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::new();
    for (class, mut group) in group_by_class(labels, classes).into_iter().enumerate() {
        let n = group.len();
        if n == 0 {
            continue;
        }
        if n < 2 && !strict {
            train.extend_from_slice(&group);
            continue;
        }
        if n < 2 {
            return Err(Error::Dataset(format!(
                "class {class} has {n} record(s); a stratified split needs at least 2"
            )));
        }
        group.shuffle(&mut rng);
        let n_test = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
        test.extend_from_slice(&group[..n_test]);
        train.extend_from_slice(&group[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Random stratified split by attack category into `(train, test)`.
pub fn split_random_stratified(
    dataset: &EncodedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    let (train, test) =
        stratified_partition(&dataset.multiclass, NUM_CLASSES, test_fraction, seed)?;
    Ok((
        dataset.select(
            &train,
            Provenance::derived(format!(
                "random stratified split train (test fraction {test_fraction}, seed {seed})"
            )),
        )?,
        dataset.select(
            &test,
            Provenance::derived(format!(
                "random stratified split test (fraction {test_fraction}, seed {seed})"
            )),
        )?,
    ))
}

/// Row indices of a reproducible subsample, ascending.
pub fn subsample_indices(
    labels: &[u8],
    classes: usize,
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<Vec<usize>> {
    check_fraction(fraction, true)?;
    if fraction == 1.0 {
        return Ok((0..labels.len()).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = Vec::new();
    if stratified {
        for mut group in group_by_class(labels, classes) {
            group.shuffle(&mut rng);
            let k = ((group.len() as f64 * fraction).round() as usize).min(group.len());
            keep.extend_from_slice(&group[..k]);
        }
    } else {
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        let k = ((labels.len() as f64 * fraction).round() as usize).min(labels.len());
        keep.extend_from_slice(&all[..k]);
    }
    if keep.is_empty() {
        return Err(Error::Dataset(format!(
            "fraction {fraction} selects no records"
        )));
    }
    keep.sort_unstable();
    Ok(keep)
}

pub fn subsample_fraction(
    dataset: &EncodedDataset,
    fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<EncodedDataset> {
    if fraction == 1.0 {
        return Ok(dataset.clone());
    }
    let rows = subsample_indices(&dataset.multiclass, NUM_CLASSES, fraction, seed, stratified)?;
    dataset.select(
        &rows,
        Provenance::derived(format!(
            "{} subsample (fraction {fraction}, seed {seed})",
            if stratified { "stratified" } else { "random" }
        )),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_proportional() {
        let labels: Vec<u8> = std::iter::repeat_n(0, 100)
            .chain(std::iter::repeat_n(1, 900))
            .collect();
        let (train, test) = stratified_partition(&labels, 2, 0.2, 1).unwrap();
        let tc = counts(&test.iter().map(|&i| labels[i]).collect::<Vec<_>>(), 2);
        assert_eq!(tc, vec![20, 180]);
        assert_eq!(train.len() + test.len(), 1000);
    }

    #[test]
    fn partition_rejects_singleton_class() {
        let labels = vec![0, 0, 0, 1];
        assert!(stratified_partition(&labels, 2, 0.5, 0).is_err());
    }

    #[test]
    fn bad_fractions() {
        let labels = vec![0, 0, 1, 1];
        assert!(stratified_partition(&labels, 2, 0.0, 0).is_err());
        assert!(stratified_partition(&labels, 2, 1.0, 0).is_err());
        assert!(subsample_indices(&labels, 2, 1.5, 0, true).is_err());
        assert_eq!(
            subsample_indices(&labels, 2, 1.0, 0, false).unwrap(),
            vec![0, 1, 2, 3]
        );
    }

    #[test]
    fn subsample_of_official_test_size() {
        let labels = vec![0u8; 82_332];
        let rows = subsample_indices(&labels, 2, 0.2, 9, false).unwrap();
        assert!(rows.len() == 16_466 || rows.len() == 16_467);
    }
}
