use serde::{Deserialize, Serialize};

use crate::dataset::{LabelView, NUM_CLASSES, NUM_FEATURES};
use crate::error::{Error, Result};
use crate::nn::Padding;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// One sigmoid output: probability of attack.
    #[default]
    Binary,
    /// Ten softmax outputs, one per traffic category.
    Multiclass,
}

impl Head {
    pub fn width(self) -> usize {
        match self {
            Head::Binary => 1,
            Head::Multiclass => NUM_CLASSES,
        }
    }

    pub fn label_view(self) -> LabelView {
        match self {
            Head::Binary => LabelView::Binary,
            Head::Multiclass => LabelView::Multiclass,
        }
    }

    pub fn classes(self) -> usize {
        self.label_view().classes()
    }

    pub fn name(self) -> &'static str {
        match self {
            Head::Binary => "binary",
            Head::Multiclass => "multiclass",
        }
    }
}

impl std::str::FromStr for Head {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Head::Binary),
            "multiclass" => Ok(Head::Multiclass),
            other => Err(Error::InvalidConfig(format!(
                "unknown head `{other}` (expected binary or multiclass)"
            ))),
        }
    }
}

/// Layer stack: Conv1D(F, K) + ReLU → MaxPool → BiLSTM(H) → Dense(head).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub conv_filters: usize,
    pub kernel: usize,
    pub padding: Padding,
    pub pool: usize,
    pub hidden: usize,
    pub head: Head,
    /// Dropout on the concatenated BiLSTM state during training.
    pub dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            conv_filters: 32,
            kernel: 3,
            padding: Padding::Same,
            pool: 2,
            hidden: 16,
            head: Head::Binary,
            dropout: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn binary() -> Self {
        Self::default()
    }

    pub fn multiclass() -> Self {
        Self {
            head: Head::Multiclass,
            ..Self::default()
        }
    }

    pub fn input_len(&self) -> usize {
        NUM_FEATURES
    }

    pub fn conv_len(&self) -> usize {
        match self.padding {
            Padding::Same => self.input_len(),
            Padding::Valid => (self.input_len() + 1).saturating_sub(self.kernel),
        }
    }

    /// Number of time steps the BiLSTM sees.
    pub fn sequence_len(&self) -> usize {
        self.conv_len() / self.pool.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("conv_filters", self.conv_filters),
            ("kernel", self.kernel),
            ("pool", self.pool),
            ("hidden", self.hidden),
        ] {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if self.padding == Padding::Valid && self.kernel > self.input_len() {
            return Err(Error::InvalidConfig(format!(
                "kernel {} exceeds input length {}",
                self.kernel,
                self.input_len()
            )));
        }
        if self.pool > self.conv_len() {
            return Err(Error::InvalidConfig(format!(
                "pool {} exceeds sequence length {}",
                self.pool,
                self.conv_len()
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout {} must be in [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    /// Closed-form trainable parameter count.
    pub fn param_count(&self) -> usize {
        let (f, k, h, out) = (
            self.conv_filters,
            self.kernel,
            self.hidden,
            self.head.width(),
        );
        let conv = f * k + f;
        let bilstm = 2 * 4 * (h * f + h * h + h);
        let dense = out * 2 * h + out;
        conv + bilstm + dense
    }
}
