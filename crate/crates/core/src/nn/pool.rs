use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Non-overlapping max pooling along the length axis of `[batch, length, channels]`.
/// An incomplete trailing window is dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaxPool1d {
    pub pool: usize,
}

#[derive(Clone, Debug)]
pub struct MaxPoolCache {
    input_shape: Vec<usize>,
    /// Flat input offset of the winning element for every output element.
    argmax: Vec<usize>,
}

impl MaxPool1d {
    pub fn new(pool: usize) -> Result<Self> {
        if pool == 0 {
            return Err(Error::InvalidConfig("pool width must be at least 1".into()));
        }
        Ok(Self { pool })
    }

    pub fn output_len(&self, len: usize) -> usize {
        len / self.pool
    }

    pub fn forward<T: Real>(&self, input: &Tensor<T>) -> Result<(Tensor<T>, MaxPoolCache)> {
        input.expect_rank("maxpool1d", 3)?;
        let (b_n, len, c_n) = (input.shape()[0], input.shape()[1], input.shape()[2]);
        if self.pool > len {
            return Err(Error::shape("maxpool1d", "length", self.pool, len));
        }
        let out_len = self.output_len(len);
        let x = input.data();
        let mut out = Vec::with_capacity(b_n * out_len * c_n);
        let mut argmax = Vec::with_capacity(b_n * out_len * c_n);
        for b in 0..b_n {
            for t in 0..out_len {
                for c in 0..c_n {
                    let mut best = (b * len + t * self.pool) * c_n + c;
                    for p in 1..self.pool {
                        let idx = (b * len + t * self.pool + p) * c_n + c;
                        // strict comparison keeps the earliest index on ties
                        if x[idx] > x[best] {
                            best = idx;
                        }
                    }
                    out.push(x[best]);
                    argmax.push(best);
                }
            }
        }
        Ok((
            Tensor::new(vec![b_n, out_len, c_n], out)?,
            MaxPoolCache {
                input_shape: input.shape().to_vec(),
                argmax,
            },
        ))
    }

    pub fn backward<T: Real>(
        &self,
        grad_out: &Tensor<T>,
        cache: &MaxPoolCache,
    ) -> Result<Tensor<T>> {
        if grad_out.len() != cache.argmax.len() {
            return Err(Error::shape(
                "maxpool1d backward",
                "elements",
                cache.argmax.len(),
                grad_out.len(),
            ));
        }
        let mut gx = Tensor::zeros(&cache.input_shape);
        let gxd = gx.data_mut();
        for (&src, &g) in cache.argmax.iter().zip(grad_out.data()) {
            gxd[src] += g;
        }
        Ok(gx)
    }
}
