//! LSTM cell and bidirectional LSTM with exact backpropagation through time.
//!
//! Gate pre-activations are packed along the row axis in the order
//! input, forget, cell, output:
//!
//! ```text
//! i = σ(W_i x + U_i h + b_i)      f = σ(W_f x + U_f h + b_f)
//! g = tanh(W_g x + U_g h + b_g)   o = σ(W_o x + U_o h + b_o)
//! c' = f ⊙ c + i ⊙ g              h' = o ⊙ tanh(c')
//! ```

use crate::error::{Error, Result};
use crate::nn::activation::sigmoid;
use crate::tensor::{axpy, dot, Real, Tensor};

/// Parameters of one LSTM direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Lstm<T = f32> {
    /// `[4H, D]`
    pub w_input: Tensor<T>,
    /// `[4H, H]`
    pub w_recurrent: Tensor<T>,
    /// `[4H]`
    pub bias: Tensor<T>,
}

/// `(dx, dh_prev, dc_prev, parameter grads)` from one step.
pub type StepGrads<T> = (Tensor<T>, Tensor<T>, Tensor<T>, LstmGrads<T>);

#[derive(Clone, Debug)]
pub struct LstmGrads<T> {
    pub w_input: Tensor<T>,
    pub w_recurrent: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Real> LstmGrads<T> {
    fn zeros_like(p: &Lstm<T>) -> Self {
        Self {
            w_input: Tensor::zeros(p.w_input.shape()),
            w_recurrent: Tensor::zeros(p.w_recurrent.shape()),
            bias: Tensor::zeros(p.bias.shape()),
        }
    }
}

/// Everything a single step needs for its backward pass.
#[derive(Clone, Debug)]
pub struct LstmStepCache<T> {
    batch: usize,
    x: Vec<T>,
    h_prev: Vec<T>,
    c_prev: Vec<T>,
    gates: Vec<T>,
    tanh_c: Vec<T>,
}

impl<T: Real> Lstm<T> {
    pub fn new(w_input: Tensor<T>, w_recurrent: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        w_input.expect_rank("lstm", 2)?;
        w_recurrent.expect_rank("lstm", 2)?;
        bias.expect_rank("lstm", 1)?;
        let rows = w_input.shape()[0];
        if !rows.is_multiple_of(4) {
            return Err(Error::InvalidTensor(format!(
                "lstm input weights have {rows} rows, not a multiple of 4"
            )));
        }
        let h = rows / 4;
        if w_recurrent.shape() != [rows, h] {
            return Err(Error::shape(
                "lstm",
                "recurrent weights",
                h,
                w_recurrent.shape()[1],
            ));
        }
        if bias.shape()[0] != rows {
            return Err(Error::shape("lstm", "bias", rows, bias.shape()[0]));
        }
        Ok(Self {
            w_input,
            w_recurrent,
            bias,
        })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_input: Tensor::zeros(&[4 * hidden, input]),
            w_recurrent: Tensor::zeros(&[4 * hidden, hidden]),
            bias: Tensor::zeros(&[4 * hidden]),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_recurrent.shape()[1]
    }

    pub fn input_size(&self) -> usize {
        self.w_input.shape()[1]
    }

    pub fn param_count(&self) -> usize {
        self.w_input.len() + self.w_recurrent.len() + self.bias.len()
    }

    /// Raw step on flat `[B, *]` buffers. Writes activated gates `[B, 4H]`,
    /// the new cell and hidden states and `tanh(c')`.
    #[allow(clippy::too_many_arguments)]
    fn step_raw(
        &self,
        batch: usize,
        x: &[T],
        h: &[T],
        c: &[T],
        gates: &mut [T],
        c_out: &mut [T],
        h_out: &mut [T],
        tanh_c: &mut [T],
    ) {
        let (d_n, h_n) = (self.input_size(), self.hidden());
        let wi = self.w_input.data();
        let wr = self.w_recurrent.data();
        let bias = self.bias.data();
        for b in 0..batch {
            let xb = &x[b * d_n..(b + 1) * d_n];
            let hb = &h[b * h_n..(b + 1) * h_n];
            let gb = &mut gates[b * 4 * h_n..(b + 1) * 4 * h_n];
            for r in 0..4 * h_n {
                let pre = bias[r]
                    + dot(&wi[r * d_n..(r + 1) * d_n], xb)
                    + dot(&wr[r * h_n..(r + 1) * h_n], hb);
                gb[r] = if (2 * h_n..3 * h_n).contains(&r) {
                    pre.tanh()
                } else {
                    sigmoid(pre)
                };
            }
            for j in 0..h_n {
                let (i, f, g, o) = (gb[j], gb[h_n + j], gb[2 * h_n + j], gb[3 * h_n + j]);
                let cn = f * c[b * h_n + j] + i * g;
                let tc = cn.tanh();
                c_out[b * h_n + j] = cn;
                tanh_c[b * h_n + j] = tc;
                h_out[b * h_n + j] = o * tc;
            }
        }
    }

    /// Raw backward of one step. `dh` and `dc` are the gradients arriving at
    /// the step's outputs; on return they hold the gradients for `h_prev` and
    /// `c_prev`. `dx` is overwritten.
    #[allow(clippy::too_many_arguments)]
    fn step_backward_raw(
        &self,
        batch: usize,
        x: &[T],
        h_prev: &[T],
        c_prev: &[T],
        gates: &[T],
        tanh_c: &[T],
        dh: &mut [T],
        dc: &mut [T],
        dx: &mut [T],
        grads: &mut LstmGrads<T>,
        da: &mut [T],
    ) {
        let (d_n, h_n) = (self.input_size(), self.hidden());
        let one = T::one();
        let wi = self.w_input.data();
        let wr = self.w_recurrent.data();
        for b in 0..batch {
            let gb = &gates[b * 4 * h_n..(b + 1) * 4 * h_n];
            for j in 0..h_n {
                let k = b * h_n + j;
                let (i, f, g, o) = (gb[j], gb[h_n + j], gb[2 * h_n + j], gb[3 * h_n + j]);
                let tc = tanh_c[k];
                let d_o = dh[k] * tc;
                let dcell = dc[k] + dh[k] * o * (one - tc * tc);
                da[j] = dcell * g * i * (one - i);
                da[h_n + j] = dcell * c_prev[k] * f * (one - f);
                da[2 * h_n + j] = dcell * i * (one - g * g);
                da[3 * h_n + j] = d_o * o * (one - o);
                dc[k] = dcell * f;
            }
            let xb = &x[b * d_n..(b + 1) * d_n];
            let hb = &h_prev[b * h_n..(b + 1) * h_n];
            let dxb = &mut dx[b * d_n..(b + 1) * d_n];
            dxb.iter_mut().for_each(|v| *v = T::zero());
            let dhb = &mut dh[b * h_n..(b + 1) * h_n];
            dhb.iter_mut().for_each(|v| *v = T::zero());
            let gwi = grads.w_input.data_mut();
            for r in 0..4 * h_n {
                axpy(da[r], xb, &mut gwi[r * d_n..(r + 1) * d_n]);
                axpy(da[r], &wi[r * d_n..(r + 1) * d_n], dxb);
            }
            let gwr = grads.w_recurrent.data_mut();
            for r in 0..4 * h_n {
                axpy(da[r], hb, &mut gwr[r * h_n..(r + 1) * h_n]);
                axpy(da[r], &wr[r * h_n..(r + 1) * h_n], dhb);
            }
            let gbias = grads.bias.data_mut();
            for r in 0..4 * h_n {
                gbias[r] += da[r];
            }
        }
    }

    fn check_step(&self, x: &Tensor<T>, h: &Tensor<T>, c: &Tensor<T>) -> Result<usize> {
        x.expect_rank("lstm_cell_step", 2)?;
        h.expect_rank("lstm_cell_step", 2)?;
        c.expect_rank("lstm_cell_step", 2)?;
        let batch = x.shape()[0];
        if x.shape()[1] != self.input_size() {
            return Err(Error::shape(
                "lstm_cell_step",
                "input features",
                self.input_size(),
                x.shape()[1],
            ));
        }
        for (t, axis) in [(h, "hidden state"), (c, "cell state")] {
            if t.shape()[1] != self.hidden() {
                return Err(Error::shape(
                    "lstm_cell_step",
                    axis,
                    self.hidden(),
                    t.shape()[1],
                ));
            }
            if t.shape()[0] != batch {
                return Err(Error::shape("lstm_cell_step", "batch", batch, t.shape()[0]));
            }
        }
        Ok(batch)
    }

    /// One LSTM step: returns `(h_t, c_t)` and the step cache.
    pub fn step(
        &self,
        x: &Tensor<T>,
        h_prev: &Tensor<T>,
        c_prev: &Tensor<T>,
    ) -> Result<(Tensor<T>, Tensor<T>, LstmStepCache<T>)> {
        let batch = self.check_step(x, h_prev, c_prev)?;
        let h_n = self.hidden();
        let mut gates = vec![T::zero(); batch * 4 * h_n];
        let mut c = vec![T::zero(); batch * h_n];
        let mut h = vec![T::zero(); batch * h_n];
        let mut tanh_c = vec![T::zero(); batch * h_n];
        self.step_raw(
            batch,
            x.data(),
            h_prev.data(),
            c_prev.data(),
            &mut gates,
            &mut c,
            &mut h,
            &mut tanh_c,
        );
        let cache = LstmStepCache {
            batch,
            x: x.data().to_vec(),
            h_prev: h_prev.data().to_vec(),
            c_prev: c_prev.data().to_vec(),
            gates,
            tanh_c,
        };
        Ok((
            Tensor::new(vec![batch, h_n], h)?,
            Tensor::new(vec![batch, h_n], c)?,
            cache,
        ))
    }

    /// Backward of [`Lstm::step`]: returns `(dx, dh_prev, dc_prev, grads)`.
    pub fn step_backward(
        &self,
        dh: &Tensor<T>,
        dc: &Tensor<T>,
        cache: &LstmStepCache<T>,
    ) -> Result<StepGrads<T>> {
        let (batch, h_n, d_n) = (cache.batch, self.hidden(), self.input_size());
        if dh.shape() != [batch, h_n] || dc.shape() != [batch, h_n] {
            return Err(Error::shape(
                "lstm step backward",
                "hidden",
                h_n,
                dh.shape()[dh.rank() - 1],
            ));
        }
        let mut grads = LstmGrads::zeros_like(self);
        let mut dh_buf = dh.data().to_vec();
        let mut dc_buf = dc.data().to_vec();
        let mut dx = vec![T::zero(); batch * d_n];
        let mut da = vec![T::zero(); 4 * h_n];
        self.step_backward_raw(
            batch,
            &cache.x,
            &cache.h_prev,
            &cache.c_prev,
            &cache.gates,
            &cache.tanh_c,
            &mut dh_buf,
            &mut dc_buf,
            &mut dx,
            &mut grads,
            &mut da,
        );
        Ok((
            Tensor::new(vec![batch, d_n], dx)?,
            Tensor::new(vec![batch, h_n], dh_buf)?,
            Tensor::new(vec![batch, h_n], dc_buf)?,
            grads,
        ))
    }

    /// Runs the direction over a time-major `[T, B, D]` buffer starting from
    /// zero state. `reverse` consumes time steps from last to first.
    fn run(&self, xs: &[T], steps: usize, batch: usize, reverse: bool) -> DirectionCache<T> {
        let (d_n, h_n) = (self.input_size(), self.hidden());
        let bh = batch * h_n;
        let mut hs = vec![T::zero(); (steps + 1) * bh];
        let mut cs = vec![T::zero(); (steps + 1) * bh];
        let mut gates = vec![T::zero(); steps * batch * 4 * h_n];
        let mut tanh_c = vec![T::zero(); steps * bh];
        for s in 0..steps {
            let t = if reverse { steps - 1 - s } else { s };
            let x = &xs[t * batch * d_n..(t + 1) * batch * d_n];
            let (h_done, h_rest) = hs.split_at_mut((s + 1) * bh);
            let (c_done, c_rest) = cs.split_at_mut((s + 1) * bh);
            self.step_raw(
                batch,
                x,
                &h_done[s * bh..],
                &c_done[s * bh..],
                &mut gates[s * batch * 4 * h_n..(s + 1) * batch * 4 * h_n],
                &mut c_rest[..bh],
                &mut h_rest[..bh],
                &mut tanh_c[s * bh..(s + 1) * bh],
            );
        }
        DirectionCache {
            reverse,
            hs,
            cs,
            gates,
            tanh_c,
        }
    }

    /// Backpropagation through time for one direction.
    ///
    /// `d_hidden` holds gradients for the hidden output at each *time* index
    /// (time-major `[T, B, H]`), `d_final` the gradient for the state after the
    /// last processed step. Returns time-major `dx` and parameter gradients.
    fn run_backward(
        &self,
        xs: &[T],
        steps: usize,
        batch: usize,
        cache: &DirectionCache<T>,
        d_hidden: Option<&[T]>,
        d_final: Option<&[T]>,
    ) -> (Vec<T>, LstmGrads<T>) {
        let (d_n, h_n) = (self.input_size(), self.hidden());
        let bh = batch * h_n;
        let mut grads = LstmGrads::zeros_like(self);
        let mut dx = vec![T::zero(); steps * batch * d_n];
        let mut dh = match d_final {
            Some(d) => d.to_vec(),
            None => vec![T::zero(); bh],
        };
        let mut dc = vec![T::zero(); bh];
        let mut da = vec![T::zero(); 4 * h_n];
        for s in (0..steps).rev() {
            let t = if cache.reverse { steps - 1 - s } else { s };
            if let Some(dhid) = d_hidden {
                for (a, &g) in dh.iter_mut().zip(&dhid[t * bh..(t + 1) * bh]) {
                    *a += g;
                }
            }
            self.step_backward_raw(
                batch,
                &xs[t * batch * d_n..(t + 1) * batch * d_n],
                &cache.hs[s * bh..(s + 1) * bh],
                &cache.cs[s * bh..(s + 1) * bh],
                &cache.gates[s * batch * 4 * h_n..(s + 1) * batch * 4 * h_n],
                &cache.tanh_c[s * bh..(s + 1) * bh],
                &mut dh,
                &mut dc,
                &mut dx[t * batch * d_n..(t + 1) * batch * d_n],
                &mut grads,
                &mut da,
            );
        }
        (dx, grads)
    }
}

#[derive(Clone, Debug)]
struct DirectionCache<T> {
    reverse: bool,
    /// Hidden state before processing step `s` lives at `s`; the final state at `T`.
    hs: Vec<T>,
    cs: Vec<T>,
    gates: Vec<T>,
    tanh_c: Vec<T>,
}

impl<T: Real> DirectionCache<T> {
    fn hidden_at_time(&self, t: usize, steps: usize, bh: usize) -> &[T] {
        let s = if self.reverse { steps - 1 - t } else { t };
        &self.hs[(s + 1) * bh..(s + 2) * bh]
    }
}

/// A pair of LSTMs reading the sequence in opposite directions.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstm<T = f32> {
    pub forward: Lstm<T>,
    pub backward: Lstm<T>,
}

#[derive(Clone, Debug)]
pub struct BiLstmCache<T> {
    batch: usize,
    steps: usize,
    xs: Vec<T>,
    fwd: DirectionCache<T>,
    bwd: DirectionCache<T>,
}

#[derive(Clone, Debug)]
pub struct BiLstmGrads<T> {
    pub forward: LstmGrads<T>,
    pub backward: LstmGrads<T>,
}

impl<T: Real> BiLstm<T> {
    pub fn new(forward: Lstm<T>, backward: Lstm<T>) -> Result<Self> {
        if forward.hidden() != backward.hidden() || forward.input_size() != backward.input_size() {
            return Err(Error::InvalidConfig(
                "bilstm directions must share input and hidden sizes".into(),
            ));
        }
        Ok(Self { forward, backward })
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            forward: Lstm::zeros(input, hidden),
            backward: Lstm::zeros(input, hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden()
    }

    pub fn input_size(&self) -> usize {
        self.forward.input_size()
    }

    pub fn output_size(&self) -> usize {
        2 * self.hidden()
    }

    pub fn param_count(&self) -> usize {
        self.forward.param_count() + self.backward.param_count()
    }

    /// Returns per-step outputs `[B, T, 2H]`, the final concatenated state
    /// `[B, 2H]` (forward state after the last step, backward state after the
    /// first) and the cache.
    pub fn forward(&self, seq: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>, BiLstmCache<T>)> {
        seq.expect_rank("bilstm", 3)?;
        let (batch, steps, d_n) = (seq.shape()[0], seq.shape()[1], seq.shape()[2]);
        if d_n != self.input_size() {
            return Err(Error::shape(
                "bilstm",
                "input features",
                self.input_size(),
                d_n,
            ));
        }
        let h_n = self.hidden();
        let bh = batch * h_n;
        let xs = to_time_major(seq.data(), batch, steps, d_n);
        let fwd = self.forward.run(&xs, steps, batch, false);
        let bwd = self.backward.run(&xs, steps, batch, true);

        let mut outputs = vec![T::zero(); batch * steps * 2 * h_n];
        for t in 0..steps {
            let hf = fwd.hidden_at_time(t, steps, bh);
            let hb = bwd.hidden_at_time(t, steps, bh);
            for b in 0..batch {
                let dst = &mut outputs[(b * steps + t) * 2 * h_n..(b * steps + t + 1) * 2 * h_n];
                dst[..h_n].copy_from_slice(&hf[b * h_n..(b + 1) * h_n]);
                dst[h_n..].copy_from_slice(&hb[b * h_n..(b + 1) * h_n]);
            }
        }
        let mut last = vec![T::zero(); batch * 2 * h_n];
        let hf = &fwd.hs[steps * bh..];
        let hb = &bwd.hs[steps * bh..];
        for b in 0..batch {
            last[b * 2 * h_n..b * 2 * h_n + h_n].copy_from_slice(&hf[b * h_n..(b + 1) * h_n]);
            last[b * 2 * h_n + h_n..(b + 1) * 2 * h_n].copy_from_slice(&hb[b * h_n..(b + 1) * h_n]);
        }
        Ok((
            Tensor::new(vec![batch, steps, 2 * h_n], outputs)?,
            Tensor::new(vec![batch, 2 * h_n], last)?,
            BiLstmCache {
                batch,
                steps,
                xs,
                fwd,
                bwd,
            },
        ))
    }

    /// Gradients may arrive at the per-step outputs, the final state, or both.
    pub fn backward(
        &self,
        grad_outputs: Option<&Tensor<T>>,
        grad_final: Option<&Tensor<T>>,
        cache: &BiLstmCache<T>,
    ) -> Result<(Tensor<T>, BiLstmGrads<T>)> {
        let (batch, steps) = (cache.batch, cache.steps);
        let (h_n, d_n) = (self.hidden(), self.input_size());
        let bh = batch * h_n;

        let (dh_f, dh_b) = match grad_outputs {
            Some(g) => {
                if g.shape() != [batch, steps, 2 * h_n] {
                    return Err(Error::shape(
                        "bilstm backward",
                        "outputs",
                        2 * h_n,
                        g.shape()[g.rank() - 1],
                    ));
                }
                let mut f = vec![T::zero(); steps * bh];
                let mut bw = vec![T::zero(); steps * bh];
                for b in 0..batch {
                    for t in 0..steps {
                        let src =
                            &g.data()[(b * steps + t) * 2 * h_n..(b * steps + t + 1) * 2 * h_n];
                        f[(t * batch + b) * h_n..(t * batch + b + 1) * h_n]
                            .copy_from_slice(&src[..h_n]);
                        bw[(t * batch + b) * h_n..(t * batch + b + 1) * h_n]
                            .copy_from_slice(&src[h_n..]);
                    }
                }
                (Some(f), Some(bw))
            }
            None => (None, None),
        };
        let (df_f, df_b) = match grad_final {
            Some(g) => {
                if g.shape() != [batch, 2 * h_n] {
                    return Err(Error::shape(
                        "bilstm backward",
                        "final state",
                        2 * h_n,
                        g.shape()[g.rank() - 1],
                    ));
                }
                let mut f = vec![T::zero(); bh];
                let mut bw = vec![T::zero(); bh];
                for b in 0..batch {
                    let src = &g.data()[b * 2 * h_n..(b + 1) * 2 * h_n];
                    f[b * h_n..(b + 1) * h_n].copy_from_slice(&src[..h_n]);
                    bw[b * h_n..(b + 1) * h_n].copy_from_slice(&src[h_n..]);
                }
                (Some(f), Some(bw))
            }
            None => (None, None),
        };

        let (dx_f, g_f) = self.forward.run_backward(
            &cache.xs,
            steps,
            batch,
            &cache.fwd,
            dh_f.as_deref(),
            df_f.as_deref(),
        );
        let (dx_b, g_b) = self.backward.run_backward(
            &cache.xs,
            steps,
            batch,
            &cache.bwd,
            dh_b.as_deref(),
            df_b.as_deref(),
        );
        let dx_tm: Vec<T> = dx_f.iter().zip(&dx_b).map(|(&a, &b)| a + b).collect();
        let dx = from_time_major(&dx_tm, batch, steps, d_n);
        Ok((
            Tensor::new(vec![batch, steps, d_n], dx)?,
            BiLstmGrads {
                forward: g_f,
                backward: g_b,
            },
        ))
    }
}

fn to_time_major<T: Real>(x: &[T], batch: usize, steps: usize, d: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    for b in 0..batch {
        for t in 0..steps {
            out[(t * batch + b) * d..(t * batch + b + 1) * d]
                .copy_from_slice(&x[(b * steps + t) * d..(b * steps + t + 1) * d]);
        }
    }
    out
}

fn from_time_major<T: Real>(x: &[T], batch: usize, steps: usize, d: usize) -> Vec<T> {
    let mut out = vec![T::zero(); x.len()];
    for b in 0..batch {
        for t in 0..steps {
            out[(b * steps + t) * d..(b * steps + t + 1) * d]
                .copy_from_slice(&x[(t * batch + b) * d..(t * batch + b + 1) * d]);
        }
    }
    out
}
