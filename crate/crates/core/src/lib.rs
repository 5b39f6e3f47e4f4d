//! Lightweight CNN-BiLSTM intrusion detection for UNSW-NB15 flow records.

pub mod baselines;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Real, Tensor};
