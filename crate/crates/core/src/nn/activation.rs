use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    /// Normalizes over the last axis.
    Softmax,
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    // split on sign so exp never overflows
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn softmax_row<T: Real>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v = *v / sum;
    }
}

impl Activation {
    /// Applies the activation. The returned tensor doubles as the cache
    /// for [`Activation::backward`].
    pub fn forward<T: Real>(self, input: &Tensor<T>) -> Tensor<T> {
        match self {
            Activation::Relu => input.map(|v| v.max(T::zero())),
            Activation::Sigmoid => input.map(sigmoid),
            Activation::Tanh => input.map(|v| v.tanh()),
            Activation::Softmax => {
                let mut out = input.clone();
                let last = *input.shape().last().expect("rank >= 1");
                for row in out.data_mut().chunks_exact_mut(last) {
                    softmax_row(row);
                }
                out
            }
        }
    }

    /// Gradient with respect to the input, given the forward input and output.
    pub fn backward<T: Real>(
        self,
        grad_out: &Tensor<T>,
        input: &Tensor<T>,
        output: &Tensor<T>,
    ) -> Result<Tensor<T>> {
        if grad_out.shape() != output.shape() || input.shape() != output.shape() {
            return Err(Error::InvalidTensor(format!(
                "{self:?} backward: grad {:?} vs output {:?}",
                grad_out.shape(),
                output.shape()
            )));
        }
        let g = grad_out.data();
        let y = output.data();
        let data: Vec<T> = match self {
            Activation::Relu => input
                .data()
                .iter()
                .zip(g)
                .map(|(&x, &gv)| if x > T::zero() { gv } else { T::zero() })
                .collect(),
            Activation::Sigmoid => y
                .iter()
                .zip(g)
                .map(|(&s, &gv)| gv * s * (T::one() - s))
                .collect(),
            Activation::Tanh => y
                .iter()
                .zip(g)
                .map(|(&t, &gv)| gv * (T::one() - t * t))
                .collect(),
            Activation::Softmax => {
                let last = *output.shape().last().expect("rank >= 1");
                let mut out = Vec::with_capacity(y.len());
                for (yr, gr) in y.chunks_exact(last).zip(g.chunks_exact(last)) {
                    let inner: T = yr.iter().zip(gr).map(|(&a, &b)| a * b).sum();
                    out.extend(yr.iter().zip(gr).map(|(&s, &gv)| s * (gv - inner)));
                }
                out
            }
        };
        Tensor::new(output.shape().to_vec(), data)
    }
}
