//! Train/test split policies over the official files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::raw::RawTable;
use crate::dataset::schema::NUM_CLASSES;
use crate::dataset::{
    split_random_stratified, stratified_partition, subsample_fraction, EncodedDataset,
    EncoderState, Provenance,
};
use crate::error::{Error, Result};

/// How training and evaluation records are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SplitPolicy {
    /// The published training and testing files as-is.
    #[default]
    Official,
    /// Pool both files and hold out this stratified fraction for testing.
    Random(f64),
    /// The official files, each reduced to this stratified fraction.
    Subsample(f64),
}

impl FromStr for SplitPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidConfig(format!(
                "invalid split `{s}` (expected official, random:F or subsample:F)"
            ))
        };
        if s == "official" {
            return Ok(SplitPolicy::Official);
        }
        let (kind, frac) = s.split_once(':').ok_or_else(bad)?;
        let f: f64 = frac.parse().map_err(|_| bad())?;
        let policy = match kind {
            "random" => SplitPolicy::Random(f),
            "subsample" => SplitPolicy::Subsample(f),
            _ => return Err(bad()),
        };
        policy.validate()?;
        Ok(policy)
    }
}

impl fmt::Display for SplitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitPolicy::Official => f.write_str("official"),
            SplitPolicy::Random(x) => write!(f, "random:{x}"),
            SplitPolicy::Subsample(x) => write!(f, "subsample:{x}"),
        }
    }
}

impl TryFrom<String> for SplitPolicy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SplitPolicy> for String {
    fn from(p: SplitPolicy) -> String {
        p.to_string()
    }
}

impl SplitPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SplitPolicy::Official => Ok(()),
            SplitPolicy::Random(f) if f > 0.0 && f < 1.0 => Ok(()),
            SplitPolicy::Subsample(f) if f > 0.0 && f <= 1.0 => Ok(()),
            other => Err(Error::InvalidConfig(format!(
                "split fraction out of range in `{other}`"
            ))),
        }
    }

    /// Random splits pool both files, so they need the training file too.
    pub fn needs_train_file(&self) -> bool {
        matches!(self, SplitPolicy::Random(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataSplit {
    pub train: EncodedDataset,
    pub test: EncodedDataset,
}

/// Encodes the official files under `policy`. The encoder is fitted on the
/// training side unless one is supplied.
pub fn split_tables(
    train: &RawTable,
    test: &RawTable,
    policy: SplitPolicy,
    seed: u64,
    encoder: Option<&EncoderState>,
) -> Result<DataSplit> {
    policy.validate()?;
    match policy {
        SplitPolicy::Official | SplitPolicy::Subsample(_) => {
            let enc = match encoder {
                Some(e) => e.clone(),
                None => EncoderState::fit(train)?,
            };
            let split = DataSplit {
                train: enc.transform(train, Provenance::OfficialTrain)?,
                test: enc.transform(test, Provenance::OfficialTest)?,
            };
            subsample_split(split, policy, seed)
        }
        SplitPolicy::Random(f) => {
            let pooled = RawTable::concat(&[train, test])?;
            let cats: Vec<u8> = pooled
                .labels()?
                .category
                .iter()
                .map(|c| c.index() as u8)
                .collect();
            let (tr, te) = stratified_partition(&cats, NUM_CLASSES, f, seed)?;
            let (tr_raw, te_raw) = (pooled.select(&tr), pooled.select(&te));
            let enc = match encoder {
                Some(e) => e.clone(),
                None => EncoderState::fit(&tr_raw)?,
            };
            Ok(DataSplit {
                train: enc.transform(
                    &tr_raw,
                    Provenance::derived(format!(
                        "random split train (test fraction {f}, seed {seed})"
                    )),
                )?,
                test: enc.transform(
                    &te_raw,
                    Provenance::derived(format!("random split test (fraction {f}, seed {seed})")),
                )?,
            })
        }
    }
}

/// Applies `policy` to already-encoded official datasets.
pub fn split_encoded(
    train: EncodedDataset,
    test: EncodedDataset,
    policy: SplitPolicy,
    seed: u64,
) -> Result<DataSplit> {
    policy.validate()?;
    match policy {
        SplitPolicy::Official | SplitPolicy::Subsample(_) => {
            subsample_split(DataSplit { train, test }, policy, seed)
        }
        SplitPolicy::Random(f) => {
            let pooled = EncodedDataset::concat(
                &[&train, &test],
                Provenance::derived("official train + test"),
            )?;
            let (train, test) = split_random_stratified(&pooled, f, seed)?;
            Ok(DataSplit { train, test })
        }
    }
}

fn subsample_split(split: DataSplit, policy: SplitPolicy, seed: u64) -> Result<DataSplit> {
    match policy {
        SplitPolicy::Subsample(f) => Ok(DataSplit {
            train: subsample_fraction(&split.train, f, seed, true)?,
            test: subsample_fraction(&split.test, f, seed, true)?,
        }),
        _ => Ok(split),
    }
}
