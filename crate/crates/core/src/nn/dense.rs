use crate::error::{Error, Result};
use crate::tensor::{axpy, dot, Real, Tensor};

/// Fully connected layer, `out = input · Wᵀ + b` with `W: [out, in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T = f32> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct DenseCache<T> {
    input: Tensor<T>,
}

#[derive(Clone, Debug)]
pub struct DenseGrads<T> {
    pub weights: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> Dense<T> {
    pub fn new(weights: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        weights.expect_rank("dense", 2)?;
        bias.expect_rank("dense", 1)?;
        if bias.shape()[0] != weights.shape()[0] {
            return Err(Error::shape(
                "dense",
                "bias",
                weights.shape()[0],
                bias.shape()[0],
            ));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Tensor::zeros(&[outputs, inputs]),
            bias: Tensor::zeros(&[outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, input: &Tensor<T>) -> Result<(Tensor<T>, DenseCache<T>)> {
        input.expect_rank("dense", 2)?;
        let (b_n, i_n) = (input.shape()[0], input.shape()[1]);
        if i_n != self.inputs() {
            return Err(Error::shape("dense", "features", self.inputs(), i_n));
        }
        let o_n = self.outputs();
        let w = self.weights.data();
        let mut out = Vec::with_capacity(b_n * o_n);
        for row in input.data().chunks_exact(i_n) {
            for o in 0..o_n {
                out.push(self.bias.data()[o] + dot(&w[o * i_n..(o + 1) * i_n], row));
            }
        }
        Ok((
            Tensor::new(vec![b_n, o_n], out)?,
            DenseCache {
                input: input.clone(),
            },
        ))
    }

    pub fn backward(
        &self,
        grad_out: &Tensor<T>,
        cache: &DenseCache<T>,
    ) -> Result<(Tensor<T>, DenseGrads<T>)> {
        let (b_n, i_n) = (cache.input.shape()[0], cache.input.shape()[1]);
        let o_n = self.outputs();
        if grad_out.shape() != [b_n, o_n] {
            return Err(Error::shape(
                "dense backward",
                "outputs",
                o_n,
                grad_out.shape().last().copied().unwrap_or(0),
            ));
        }
        let w = self.weights.data();
        let mut gx = vec![T::zero(); b_n * i_n];
        let mut gw = vec![T::zero(); o_n * i_n];
        let mut gb = vec![T::zero(); o_n];
        for b in 0..b_n {
            let x = &cache.input.data()[b * i_n..(b + 1) * i_n];
            let g = &grad_out.data()[b * o_n..(b + 1) * o_n];
            let gxr = &mut gx[b * i_n..(b + 1) * i_n];
            for (o, &gv) in g.iter().enumerate() {
                gb[o] += gv;
                axpy(gv, x, &mut gw[o * i_n..(o + 1) * i_n]);
                axpy(gv, &w[o * i_n..(o + 1) * i_n], gxr);
            }
        }
        Ok((
            Tensor::new(vec![b_n, i_n], gx)?,
            DenseGrads {
                weights: Tensor::new(vec![o_n, i_n], gw)?,
                bias: Tensor::new(vec![o_n], gb)?,
            },
        ))
    }
}
