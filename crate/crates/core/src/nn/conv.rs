use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero padding so the output length equals the input length.
    #[default]
    Same,
    Valid,
}

/// 1-D convolution over `[batch, length, channels]` inputs.
///
/// Weights are stored as `[filters, kernel, in_channels]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d<T = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
    pub padding: Padding,
    pub stride: usize,
}

#[derive(Clone, Debug)]
pub struct Conv1dCache<T> {
    input: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct Conv1dGrads<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> Conv1d<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>, padding: Padding) -> Result<Self> {
        weights.expect_rank("conv1d", 3)?;
        bias.expect_rank("conv1d", 1)?;
        if bias.shape()[0] != weights.shape()[0] {
            return Err(Error::shape(
                "conv1d",
                "bias",
                weights.shape()[0],
                bias.shape()[0],
            ));
        }
        Ok(Self {
            weights,
            bias,
            padding,
            stride: 1,
        })
    }

    pub fn zeros(filters: usize, kernel: usize, channels: usize, padding: Padding) -> Self {
        Self {
            weights: Tensor::zeros(&[filters, kernel, channels]),
            bias: Tensor::zeros(&[filters]),
            padding,
            stride: 1,
        }
    }

    pub fn filters(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn kernel(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn channels(&self) -> usize {
        self.weights.shape()[2]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Number of zeros conceptually added before the first element.
    pub fn left_pad(&self) -> usize {
        match self.padding {
            Padding::Same => (self.kernel() - 1) / 2,
            Padding::Valid => 0,
        }
    }

    pub fn output_len(&self, len: usize) -> usize {
        match self.padding {
            Padding::Same => len,
            Padding::Valid => len + 1 - self.kernel(),
        }
    }

    fn check_input(&self, input: &Tensor<T>) -> Result<()> {
        input.expect_rank("conv1d", 3)?;
        if self.stride != 1 {
            return Err(Error::InvalidConfig(format!(
                "conv1d stride {} unsupported; only stride 1 is implemented",
                self.stride
            )));
        }
        if input.shape()[2] != self.channels() {
            return Err(Error::shape(
                "conv1d",
                "channels",
                self.channels(),
                input.shape()[2],
            ));
        }
        if self.padding == Padding::Valid && input.shape()[1] < self.kernel() {
            return Err(Error::shape(
                "conv1d",
                "length",
                self.kernel(),
                input.shape()[1],
            ));
        }
        Ok(())
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, Conv1dCache<T>)> {
        self.check_input(input)?;
        let (b_n, len, c_n) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        let (f_n, k_n) = (self.filters(), self.kernel());
        let out_len = self.output_len(len);
        let pad = self.left_pad() as isize;
        let x = input.data();
        let w = self.weights.data();
        let bias = self.bias.data();
        let mut out = vec![T::zero(); b_n * out_len * f_n];
        for b in 0..b_n {
            for t in 0..out_len {
                let row = &mut out[(b * out_len + t) * f_n..(b * out_len + t + 1) * f_n];
                row.copy_from_slice(bias);
                for k in 0..k_n {
                    let src = t as isize + k as isize - pad;
                    if src < 0 || src >= len as isize {
                        continue;
                    }
                    let xin =
                        &x[(b * len + src as usize) * c_n..(b * len + src as usize + 1) * c_n];
                    for (f, o) in row.iter_mut().enumerate() {
                        let wk = &w[(f * k_n + k) * c_n..(f * k_n + k + 1) * c_n];
                        for c in 0..c_n {
                            *o += wk[c] * xin[c];
                        }
                    }
                }
            }
        }
        let out = Tensor::new(vec![b_n, out_len, f_n], out)?;
        Ok((
            out,
            Conv1dCache {
                input: input.clone(),
            },
        ))
    }

    pub fn backward(
        &self,
        grad_out: &Tensor<T>,
        cache: &Conv1dCache<T>,
    ) -> Result<(Tensor<T>, Conv1dGrads<T>)> {
        let input = &cache.input;
        let (b_n, len, c_n) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        let (f_n, k_n) = (self.filters(), self.kernel());
        let out_len = self.output_len(len);
        if grad_out.shape() != [b_n, out_len, f_n] {
            return Err(Error::InvalidTensor(format!(
                "conv1d backward: grad shape {:?}, expected {:?}",
                grad_out.shape(),
                [b_n, out_len, f_n]
            )));
        }
        let pad = self.left_pad() as isize;
        let x = input.data();
        let w = self.weights.data();
        let g = grad_out.data();
        let mut gx = vec![T::zero(); x.len()];
        let mut gw = vec![T::zero(); w.len()];
        let mut gb = vec![T::zero(); f_n];
        for b in 0..b_n {
            for t in 0..out_len {
                let grow = &g[(b * out_len + t) * f_n..(b * out_len + t + 1) * f_n];
                for (f, &gv) in grow.iter().enumerate() {
                    gb[f] += gv;
                }
                for k in 0..k_n {
                    let src = t as isize + k as isize - pad;
                    if src < 0 || src >= len as isize {
                        continue;
                    }
                    let base = (b * len + src as usize) * c_n;
                    for (f, &gv) in grow.iter().enumerate() {
                        let wbase = (f * k_n + k) * c_n;
                        for c in 0..c_n {
                            gw[wbase + c] += gv * x[base + c];
                            gx[base + c] += gv * w[wbase + c];
                        }
                    }
                }
            }
        }
        Ok((
            Tensor::new(input.shape().to_vec(), gx)?,
            Conv1dGrads {
                weights: Tensor::new(self.weights.shape().to_vec(), gw)?,
                bias: Tensor::new(vec![f_n], gb)?,
            },
        ))
    }
}
