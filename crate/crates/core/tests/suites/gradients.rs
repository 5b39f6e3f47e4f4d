//! Central finite-difference checks of every layer and loss, in f64.

use crate::common::*;
use lids::loss::{
    categorical_ce, weighted_bce, weighted_bce_with_logits, weighted_categorical_ce, ClassWeights,
};
use lids::nn::{Activation, BiLstm, Conv1d, Dense, Lstm, MaxPool1d, Padding};
use lids::Tensor;
use rand::seq::SliceRandom;
use rand::Rng;

const CASES: usize = 12;

fn assert_close(what: &str, case: usize, err: f64) {
    assert!(
        err < FD_REL_TOL,
        "{what} case {case}: relative error {err:.3e}"
    );
}

#[derive(Clone)]
struct ConvProbe {
    conv: Conv1d<f64>,
    x: Tensor<f64>,
}

pub fn conv1d_gradients() {
    let mut rng = rng(100);
    for case in 0..CASES {
        let (b, l, c, f) = (
            rng.gen_range(1..3),
            rng.gen_range(4..9),
            rng.gen_range(1..4),
            rng.gen_range(1..4),
        );
        let k = rng.gen_range(1..5);
        let padding = if case % 2 == 0 {
            Padding::Same
        } else {
            Padding::Valid
        };
        let conv = Conv1d::new(
            uniform(&mut rng, &[f, k, c], -1.0, 1.0),
            uniform(&mut rng, &[f], -1.0, 1.0),
            padding,
        )
        .unwrap();
        let x = uniform(&mut rng, &[b, l, c], -1.0, 1.0);
        let (out, cache) = conv.forward(&x).unwrap();
        let r = uniform(&mut rng, out.shape(), -1.0, 1.0);
        let (gx, grads) = conv.backward(&r, &cache).unwrap();
        let m = ConvProbe { conv, x };
        let loss = |m: &ConvProbe| probe(&m.conv.forward(&m.x).unwrap().0, &r);
        assert_close("conv1d input", case, fd_check(&m, |m| &mut m.x, loss, &gx));
        assert_close(
            "conv1d weights",
            case,
            fd_check(&m, |m| &mut m.conv.weights, loss, &grads.weights),
        );
        assert_close(
            "conv1d bias",
            case,
            fd_check(&m, |m| &mut m.conv.bias, loss, &grads.bias),
        );
    }
}

pub fn maxpool_routing_gradients() {
    let mut rng = rng(101);
    for case in 0..CASES {
        let (b, l, c, p) = (
            rng.gen_range(1..3),
            rng.gen_range(4..10),
            rng.gen_range(1..4),
            rng.gen_range(1..4),
        );
        // well-separated distinct values keep every window's maximum stable under the step
        let mut values: Vec<f64> = (0..b * l * c).map(|i| i as f64 * 0.01).collect();
        values.shuffle(&mut rng);
        let x = Tensor::new(vec![b, l, c], values).unwrap();
        let pool = MaxPool1d::new(p).unwrap();
        let (out, cache) = pool.forward(&x).unwrap();
        let r = uniform(&mut rng, out.shape(), -1.0, 1.0);
        let gx = pool.backward(&r, &cache).unwrap();
        let loss = |x: &Tensor<f64>| probe(&pool.forward(x).unwrap().0, &r);
        assert_close("maxpool input", case, fd_check(&x, |x| x, loss, &gx));
    }
}

#[derive(Clone)]
struct DenseProbe {
    dense: Dense<f64>,
    x: Tensor<f64>,
}

pub fn dense_gradients() {
    let mut rng = rng(102);
    for case in 0..CASES {
        let (b, i, o) = (
            rng.gen_range(1..4),
            rng.gen_range(1..7),
            rng.gen_range(1..5),
        );
        let dense = Dense::new(
            uniform(&mut rng, &[o, i], -1.0, 1.0),
            uniform(&mut rng, &[o], -1.0, 1.0),
        )
        .unwrap();
        let x = uniform(&mut rng, &[b, i], -1.0, 1.0);
        let (out, cache) = dense.forward(&x).unwrap();
        let r = uniform(&mut rng, out.shape(), -1.0, 1.0);
        let (gx, grads) = dense.backward(&r, &cache).unwrap();
        let m = DenseProbe { dense, x };
        let loss = |m: &DenseProbe| probe(&m.dense.forward(&m.x).unwrap().0, &r);
        assert_close("dense input", case, fd_check(&m, |m| &mut m.x, loss, &gx));
        assert_close(
            "dense weights",
            case,
            fd_check(&m, |m| &mut m.dense.weights, loss, &grads.weights),
        );
        assert_close(
            "dense bias",
            case,
            fd_check(&m, |m| &mut m.dense.bias, loss, &grads.bias),
        );
    }
}

pub fn activation_gradients() {
    let mut rng = rng(103);
    for act in [
        Activation::Relu,
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Softmax,
    ] {
        for case in 0..CASES {
            let shape = [rng.gen_range(1..4), rng.gen_range(2..6)];
            // keep ReLU inputs away from the kink
            let x = Tensor::from_fn(&shape, |_| {
                let v: f64 = rng.gen_range(0.05..3.0);
                if rng.gen_bool(0.5) {
                    v
                } else {
                    -v
                }
            });
            let out = act.forward(&x);
            let r = uniform(&mut rng, &shape, -1.0, 1.0);
            let gx = act.backward(&r, &x, &out).unwrap();
            let loss = |x: &Tensor<f64>| probe(&act.forward(x), &r);
            assert_close(&format!("{act:?}"), case, fd_check(&x, |x| x, loss, &gx));
        }
    }
}

#[derive(Clone)]
struct CellProbe {
    cell: Lstm<f64>,
    x: Tensor<f64>,
    h: Tensor<f64>,
    c: Tensor<f64>,
}

pub fn lstm_cell_gradients() {
    let mut rng = rng(104);
    for case in 0..CASES {
        let (b, d, h) = (
            rng.gen_range(1..3),
            rng.gen_range(1..5),
            rng.gen_range(1..4),
        );
        let cell = Lstm::new(
            uniform(&mut rng, &[4 * h, d], -1.0, 1.0),
            uniform(&mut rng, &[4 * h, h], -1.0, 1.0),
            uniform(&mut rng, &[4 * h], -1.0, 1.0),
        )
        .unwrap();
        let m = CellProbe {
            cell,
            x: uniform(&mut rng, &[b, d], -1.0, 1.0),
            h: uniform(&mut rng, &[b, h], -1.0, 1.0),
            c: uniform(&mut rng, &[b, h], -1.0, 1.0),
        };
        let rh = uniform(&mut rng, &[b, h], -1.0, 1.0);
        let rc = uniform(&mut rng, &[b, h], -1.0, 1.0);
        let (_, _, cache) = m.cell.step(&m.x, &m.h, &m.c).unwrap();
        let (dx, dh, dc, grads) = m.cell.step_backward(&rh, &rc, &cache).unwrap();
        let loss = |m: &CellProbe| {
            let (h, c, _) = m.cell.step(&m.x, &m.h, &m.c).unwrap();
            probe(&h, &rh) + probe(&c, &rc)
        };
        assert_close("lstm x", case, fd_check(&m, |m| &mut m.x, loss, &dx));
        assert_close("lstm h_prev", case, fd_check(&m, |m| &mut m.h, loss, &dh));
        assert_close("lstm c_prev", case, fd_check(&m, |m| &mut m.c, loss, &dc));
        assert_close(
            "lstm W",
            case,
            fd_check(&m, |m| &mut m.cell.w_input, loss, &grads.w_input),
        );
        assert_close(
            "lstm U",
            case,
            fd_check(&m, |m| &mut m.cell.w_recurrent, loss, &grads.w_recurrent),
        );
        assert_close(
            "lstm b",
            case,
            fd_check(&m, |m| &mut m.cell.bias, loss, &grads.bias),
        );
    }
}

#[derive(Clone)]
struct BiProbe {
    net: BiLstm<f64>,
    x: Tensor<f64>,
}

fn pick(m: &mut BiProbe, forward: bool) -> &mut Lstm<f64> {
    if forward {
        &mut m.net.forward
    } else {
        &mut m.net.backward
    }
}

pub fn bilstm_unroll_gradients() {
    let mut rng = rng(105);
    for case in 0..CASES {
        let (b, t, d, h) = (
            rng.gen_range(1..3),
            rng.gen_range(1..6),
            rng.gen_range(1..4),
            rng.gen_range(1..4),
        );
        let mut cell = || {
            Lstm::new(
                uniform(&mut rng, &[4 * h, d], -0.8, 0.8),
                uniform(&mut rng, &[4 * h, h], -0.8, 0.8),
                uniform(&mut rng, &[4 * h], -0.5, 0.5),
            )
            .unwrap()
        };
        let net = BiLstm::new(cell(), cell()).unwrap();
        let m = BiProbe {
            net,
            x: uniform(&mut rng, &[b, t, d], -1.0, 1.0),
        };
        let (outputs, last, cache) = m.net.forward(&m.x).unwrap();
        // alternate between final-state-only, per-step-only and both
        let ro = (case % 3 != 0).then(|| uniform(&mut rng, outputs.shape(), -1.0, 1.0));
        let rf = (case % 3 != 1).then(|| uniform(&mut rng, last.shape(), -1.0, 1.0));
        let (dx, grads) = m.net.backward(ro.as_ref(), rf.as_ref(), &cache).unwrap();
        let loss = |m: &BiProbe| {
            let (o, f, _) = m.net.forward(&m.x).unwrap();
            ro.as_ref().map_or(0.0, |r| probe(&o, r)) + rf.as_ref().map_or(0.0, |r| probe(&f, r))
        };
        assert_close("bilstm x", case, fd_check(&m, |m| &mut m.x, loss, &dx));
        for (dir, g) in [("forward", &grads.forward), ("backward", &grads.backward)] {
            let fwd = dir == "forward";
            assert_close(
                &format!("bilstm {dir} W"),
                case,
                fd_check(&m, |m| &mut pick(m, fwd).w_input, loss, &g.w_input),
            );
            assert_close(
                &format!("bilstm {dir} U"),
                case,
                fd_check(&m, |m| &mut pick(m, fwd).w_recurrent, loss, &g.w_recurrent),
            );
            assert_close(
                &format!("bilstm {dir} b"),
                case,
                fd_check(&m, |m| &mut pick(m, fwd).bias, loss, &g.bias),
            );
        }
    }
}

fn random_weights(rng: &mut rand_chacha::ChaCha8Rng, classes: usize) -> ClassWeights {
    ClassWeights::new((0..classes).map(|_| rng.gen_range(0.2..3.0)).collect()).unwrap()
}

pub fn bce_gradients() {
    let mut rng = rng(106);
    for case in 0..CASES {
        let b = rng.gen_range(1..6);
        let targets: Vec<u8> = (0..b).map(|_| rng.gen_range(0..2)).collect();
        let w = random_weights(&mut rng, 2);
        let p = uniform(&mut rng, &[b, 1], 0.05, 0.95);
        let (_, g) = weighted_bce(&p, &targets, &w).unwrap();
        assert_close(
            "weighted bce",
            case,
            fd_check(&p, |p| p, |p| weighted_bce(p, &targets, &w).unwrap().0, &g),
        );
        let z = uniform(&mut rng, &[b, 1], -4.0, 4.0);
        let (_, g) = weighted_bce_with_logits(&z, &targets, &w).unwrap();
        assert_close(
            "weighted bce (logits)",
            case,
            fd_check(
                &z,
                |z| z,
                |z| weighted_bce_with_logits(z, &targets, &w).unwrap().0,
                &g,
            ),
        );
    }
}

pub fn categorical_ce_gradients() {
    let mut rng = rng(107);
    for case in 0..CASES {
        let (b, c) = (rng.gen_range(1..5), rng.gen_range(2..11));
        let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..c)).collect();
        let z = uniform(&mut rng, &[b, c], -3.0, 3.0);
        let (_, g) = categorical_ce(&z, &targets).unwrap();
        assert_close(
            "categorical ce",
            case,
            fd_check(&z, |z| z, |z| categorical_ce(z, &targets).unwrap().0, &g),
        );
        let w = random_weights(&mut rng, c);
        let (_, g) = weighted_categorical_ce(&z, &targets, &w).unwrap();
        assert_close(
            "weighted categorical ce",
            case,
            fd_check(
                &z,
                |z| z,
                |z| weighted_categorical_ce(z, &targets, &w).unwrap().0,
                &g,
            ),
        );
    }
}
