//! The assembled CNN-BiLSTM stack.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::config::{Head, ModelConfig};
use crate::nn::init::glorot_uniform;
use crate::nn::{
    sigmoid, softmax_row, Activation, BiLstm, BiLstmCache, Conv1d, Conv1dCache, Dense, DenseCache,
    Lstm, MaxPool1d, MaxPoolCache,
};
use crate::tensor::{Real, Tensor};

/// Rows per inference chunk.
const PREDICT_CHUNK: usize = 512;

/// Trainable tensor names in manifest order.
pub const PARAM_NAMES: [&str; 10] = [
    "conv1d.weights",
    "conv1d.bias",
    "bilstm.forward.w_input",
    "bilstm.forward.w_recurrent",
    "bilstm.forward.bias",
    "bilstm.backward.w_input",
    "bilstm.backward.w_recurrent",
    "bilstm.backward.bias",
    "dense.weights",
    "dense.bias",
];

/// Total scalar count of a parameter list.
pub fn param_count<T: Real>(params: &[&Tensor<T>]) -> usize {
    params.iter().map(|p| p.len()).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T = f32> {
    config: ModelConfig,
    conv: Conv1d<T>,
    pool: MaxPool1d,
    bilstm: BiLstm<T>,
    dense: Dense<T>,
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    conv: Conv1dCache<T>,
    conv_out: Tensor<T>,
    relu_out: Tensor<T>,
    pool: MaxPoolCache,
    bilstm: BiLstmCache<T>,
    dropout: Option<Vec<T>>,
    dense: DenseCache<T>,
}

impl Network<f32> {
    /// Builds an untrained network. Weight matrices use Glorot-uniform
    /// initialisation, biases start at zero except the LSTM forget gates (1.0).
    pub fn build(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, k, h, out) = (
            config.conv_filters,
            config.kernel,
            config.hidden,
            config.head.width(),
        );
        let conv = Conv1d::new(
            glorot_uniform(&[f, k, 1], k, k * f, &mut rng),
            Tensor::zeros(&[f]),
            config.padding,
        )?;
        let mut direction = || -> Result<Lstm<f32>> {
            let mut bias = Tensor::zeros(&[4 * h]);
            bias.data_mut()[h..2 * h].fill(1.0);
            Lstm::new(
                glorot_uniform(&[4 * h, f], f, 4 * h, &mut rng),
                glorot_uniform(&[4 * h, h], h, 4 * h, &mut rng),
                bias,
            )
        };
        let bilstm = BiLstm::new(direction()?, direction()?)?;
        let dense = Dense::new(
            glorot_uniform(&[out, 2 * h], 2 * h, out, &mut rng),
            Tensor::zeros(&[out]),
        )?;
        Ok(Self {
            config: config.clone(),
            conv,
            pool: MaxPool1d::new(config.pool)?,
            bilstm,
            dense,
        })
    }
}

impl<T: Real> Network<T> {
    /// Reassembles a network from tensors in [`PARAM_NAMES`] order.
    pub fn from_params(config: &ModelConfig, mut params: Vec<Tensor<T>>) -> Result<Self> {
        config.validate()?;
        if params.len() != PARAM_NAMES.len() {
            return Err(Error::shape(
                "network",
                "parameter tensors",
                PARAM_NAMES.len(),
                params.len(),
            ));
        }
        let mut take = || params.remove(0);
        let conv = Conv1d::new(take(), take(), config.padding)?;
        let fwd = Lstm::new(take(), take(), take())?;
        let bwd = Lstm::new(take(), take(), take())?;
        let dense = Dense::new(take(), take())?;
        let net = Self {
            config: config.clone(),
            conv,
            pool: MaxPool1d::new(config.pool)?,
            bilstm: BiLstm::new(fwd, bwd)?,
            dense,
        };
        let expected = config.param_count();
        if net.param_count() != expected || net.param_shapes() != Self::expected_shapes(config) {
            return Err(Error::InvalidConfig(format!(
                "parameter shapes {:?} do not match the configuration",
                net.param_shapes()
            )));
        }
        Ok(net)
    }

    pub fn expected_shapes(config: &ModelConfig) -> Vec<Vec<usize>> {
        let (f, k, h, out) = (
            config.conv_filters,
            config.kernel,
            config.hidden,
            config.head.width(),
        );
        vec![
            vec![f, k, 1],
            vec![f],
            vec![4 * h, f],
            vec![4 * h, h],
            vec![4 * h],
            vec![4 * h, f],
            vec![4 * h, h],
            vec![4 * h],
            vec![out, 2 * h],
            vec![out],
        ]
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn head(&self) -> Head {
        self.config.head
    }

    pub fn conv(&self) -> &Conv1d<T> {
        &self.conv
    }

    pub fn bilstm(&self) -> &BiLstm<T> {
        &self.bilstm
    }

    pub fn dense(&self) -> &Dense<T> {
        &self.dense
    }

    pub fn params(&self) -> Vec<&Tensor<T>> {
        vec![
            &self.conv.weights,
            &self.conv.bias,
            &self.bilstm.forward.w_input,
            &self.bilstm.forward.w_recurrent,
            &self.bilstm.forward.bias,
            &self.bilstm.backward.w_input,
            &self.bilstm.backward.w_recurrent,
            &self.bilstm.backward.bias,
            &self.dense.weights,
            &self.dense.bias,
        ]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![
            &mut self.conv.weights,
            &mut self.conv.bias,
            &mut self.bilstm.forward.w_input,
            &mut self.bilstm.forward.w_recurrent,
            &mut self.bilstm.forward.bias,
            &mut self.bilstm.backward.w_input,
            &mut self.bilstm.backward.w_recurrent,
            &mut self.bilstm.backward.bias,
            &mut self.dense.weights,
            &mut self.dense.bias,
        ]
    }

    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        self.params().iter().map(|p| p.shape().to_vec()).collect()
    }

    /// Count of stored weight and bias scalars.
    pub fn param_count(&self) -> usize {
        param_count(&self.params())
    }

    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            config: self.config.clone(),
            conv: Conv1d {
                weights: self.conv.weights.cast(),
                bias: self.conv.bias.cast(),
                padding: self.conv.padding,
                stride: self.conv.stride,
            },
            pool: self.pool,
            bilstm: BiLstm {
                forward: Lstm {
                    w_input: self.bilstm.forward.w_input.cast(),
                    w_recurrent: self.bilstm.forward.w_recurrent.cast(),
                    bias: self.bilstm.forward.bias.cast(),
                },
                backward: Lstm {
                    w_input: self.bilstm.backward.w_input.cast(),
                    w_recurrent: self.bilstm.backward.w_recurrent.cast(),
                    bias: self.bilstm.backward.bias.cast(),
                },
            },
            dense: Dense {
                weights: self.dense.weights.cast(),
                bias: self.dense.bias.cast(),
            },
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        x.expect_rank("network", 3)?;
        if x.shape()[1] != self.config.input_len() {
            return Err(Error::shape(
                "network",
                "features",
                self.config.input_len(),
                x.shape()[1],
            ));
        }
        if x.shape()[2] != 1 {
            return Err(Error::shape("network", "channels", 1, x.shape()[2]));
        }
        Ok(())
    }

    /// Forward pass to logits `[B, head width]`. `dropout_mask`, when given,
    /// multiplies the `[B, 2H]` BiLSTM state elementwise.
    pub fn forward(
        &self,
        x: &Tensor<T>,
        dropout_mask: Option<Vec<T>>,
    ) -> Result<(Tensor<T>, ForwardCache<T>)> {
        self.check_input(x)?;
        let (conv_out, conv) = self.conv.forward(x)?;
        let relu_out = Activation::Relu.forward(&conv_out);
        let (pooled, pool) = self.pool.forward(&relu_out)?;
        let (_, mut last, bilstm) = self.bilstm.forward(&pooled)?;
        if let Some(mask) = &dropout_mask {
            if mask.len() != last.len() {
                return Err(Error::shape("dropout", "mask", last.len(), mask.len()));
            }
            for (v, &m) in last.data_mut().iter_mut().zip(mask) {
                *v *= m;
            }
        }
        let (logits, dense) = self.dense.forward(&last)?;
        Ok((
            logits,
            ForwardCache {
                conv,
                conv_out,
                relu_out,
                pool,
                bilstm,
                dropout: dropout_mask,
                dense,
            },
        ))
    }

    /// Backward pass from logit gradients; returns parameter gradients in
    /// [`PARAM_NAMES`] order.
    pub fn backward(
        &self,
        grad_logits: &Tensor<T>,
        cache: Option<&ForwardCache<T>>,
    ) -> Result<Vec<Tensor<T>>> {
        let cache = cache.ok_or(Error::MissingCache("network"))?;
        let (mut g_last, g_dense) = self.dense.backward(grad_logits, &cache.dense)?;
        if let Some(mask) = &cache.dropout {
            for (g, &m) in g_last.data_mut().iter_mut().zip(mask) {
                *g *= m;
            }
        }
        let (g_pooled, g_lstm) = self.bilstm.backward(None, Some(&g_last), &cache.bilstm)?;
        let g_relu = self.pool.backward(&g_pooled, &cache.pool)?;
        let g_conv_out = Activation::Relu.backward(&g_relu, &cache.conv_out, &cache.relu_out)?;
        let (_, g_conv) = self.conv.backward(&g_conv_out, &cache.conv)?;
        Ok(vec![
            g_conv.weights,
            g_conv.bias,
            g_lstm.forward.w_input,
            g_lstm.forward.w_recurrent,
            g_lstm.forward.bias,
            g_lstm.backward.w_input,
            g_lstm.backward.w_recurrent,
            g_lstm.backward.bias,
            g_dense.weights,
            g_dense.bias,
        ])
    }

    /// Logits mapped to probabilities: sigmoid for the binary head, softmax
    /// over classes otherwise.
    pub fn probabilities(&self, logits: &Tensor<T>) -> Tensor<T> {
        match self.config.head {
            Head::Binary => logits.map(sigmoid),
            Head::Multiclass => {
                let mut p = logits.clone();
                let w = self.config.head.width();
                for row in p.data_mut().chunks_exact_mut(w) {
                    softmax_row(row);
                }
                p
            }
        }
    }

    /// Probabilities for `[N, 42, 1]` features, computed in independent
    /// chunks. Each row depends only on its own input.
    pub fn predict_proba(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let n = x.shape()[0];
        let starts: Vec<usize> = (0..n).step_by(PREDICT_CHUNK).collect();
        let parts: Vec<Tensor<T>> = starts
            .par_iter()
            .map(|&s| {
                let chunk = x.slice_outer(s, (s + PREDICT_CHUNK).min(n));
                let (logits, _) = self.forward(&chunk, None)?;
                Ok(self.probabilities(&logits))
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&Tensor<T>> = parts.iter().collect();
        Tensor::concat_outer(&refs)
    }
}
