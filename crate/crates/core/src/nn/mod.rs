//! Layer families with analytic forward and backward passes.
//!
//! Each layer's `forward` returns its output together with a cache value, and
//! `backward` consumes that cache. Inputs are never mutated.

pub mod activation;
pub mod conv;
pub mod dense;
pub mod init;
pub mod lstm;
pub mod pool;

pub use activation::{sigmoid, softmax_row, Activation};
pub use conv::{Conv1d, Conv1dCache, Conv1dGrads, Padding};
pub use dense::{Dense, DenseCache, DenseGrads};
pub use lstm::{BiLstm, BiLstmCache, BiLstmGrads, Lstm, LstmGrads, LstmStepCache};
pub use pool::{MaxPool1d, MaxPoolCache};
