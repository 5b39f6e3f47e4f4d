//! JSON run configuration with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::SplitPolicy;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TrainConfig, Weighting};

/// Optional training overrides; unset fields take the head's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub validation_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataPaths {
    pub train_csv: Option<PathBuf>,
    pub test_csv: Option<PathBuf>,
    /// Directory written by `prepare`.
    pub prepared: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub model: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub prepared: Option<PathBuf>,
}

/// A reproducible experiment manifest. Command-line flags win over values
/// set here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub train: TrainSection,
    pub data: DataPaths,
    pub split: SplitPolicy,
    pub weighting: Option<Weighting>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub deterministic: bool,
    pub threshold: f64,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainSection::default(),
            data: DataPaths::default(),
            split: SplitPolicy::Official,
            weighting: None,
            seed: 0,
            threads: None,
            deterministic: false,
            threshold: 0.5,
            output: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Training hyperparameters for the configured head.
    pub fn train_config(&self) -> TrainConfig {
        let mut t = TrainConfig::for_head(self.model.head);
        let s = &self.train;
        t.epochs = s.epochs.unwrap_or(t.epochs);
        t.batch_size = s.batch_size.unwrap_or(t.batch_size);
        t.learning_rate = s.learning_rate.unwrap_or(t.learning_rate);
        t.validation_fraction = s.validation_fraction.unwrap_or(t.validation_fraction);
        t.weighting = self.weighting.unwrap_or(t.weighting);
        t.seed = self.seed;
        t.deterministic = self.deterministic;
        t
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.split.validate()?;
        self.train_config().validate()?;
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} must be in [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }
}
