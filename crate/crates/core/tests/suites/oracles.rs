//! Layers against independent naive-loop implementations on random small
//! instances (double precision, 1e-12 absolute).

#![allow(clippy::needless_range_loop)]

use crate::common::*;
use lids::nn::{Conv1d, Dense, Lstm, MaxPool1d, Padding};
use rand::Rng;

const INSTANCES: usize = 120;
const TOL: f64 = 1e-12;

fn conv_oracle(
    x: &[f64],
    (b_n, l, c_n): (usize, usize, usize),
    w: &[f64],
    bias: &[f64],
    f_n: usize,
    k_n: usize,
    same: bool,
) -> Vec<f64> {
    let (pad, out_len) = if same {
        ((k_n - 1) / 2, l)
    } else {
        (0, l + 1 - k_n)
    };
    let mut out = Vec::new();
    for b in 0..b_n {
        for t in 0..out_len {
            for f in 0..f_n {
                let mut acc = bias[f];
                for k in 0..k_n {
                    let pos = t as isize + k as isize - pad as isize;
                    if pos < 0 || pos >= l as isize {
                        continue;
                    }
                    for c in 0..c_n {
                        acc += w[(f * k_n + k) * c_n + c] * x[(b * l + pos as usize) * c_n + c];
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

pub fn conv1d_matches_naive_loops() {
    let mut rng = rng(200);
    for _ in 0..INSTANCES {
        let (b, l, c, f, k) = (
            rng.gen_range(1..4),
            rng.gen_range(3..12),
            rng.gen_range(1..4),
            rng.gen_range(1..6),
            rng.gen_range(1..4),
        );
        let same = rng.gen_bool(0.5);
        let w = uniform(&mut rng, &[f, k, c], -2.0, 2.0);
        let bias = uniform(&mut rng, &[f], -1.0, 1.0);
        let x = uniform(&mut rng, &[b, l, c], -3.0, 3.0);
        let conv = Conv1d::new(
            w.clone(),
            bias.clone(),
            if same { Padding::Same } else { Padding::Valid },
        )
        .unwrap();
        let (out, _) = conv.forward(&x).unwrap();
        let expected = conv_oracle(x.data(), (b, l, c), w.data(), bias.data(), f, k, same);
        assert!(max_abs_diff(out.data(), &expected) <= TOL);
    }
}

pub fn maxpool_matches_naive_loops() {
    let mut rng = rng(201);
    for _ in 0..INSTANCES {
        let (b, l, c) = (
            rng.gen_range(1..4),
            rng.gen_range(2..13),
            rng.gen_range(1..5),
        );
        let p = rng.gen_range(1..=l.min(3));
        let x = uniform(&mut rng, &[b, l, c], -3.0, 3.0);
        let (out, _) = MaxPool1d::new(p).unwrap().forward(&x).unwrap();
        let mut expected = Vec::new();
        for bi in 0..b {
            for j in 0..l / p {
                for ci in 0..c {
                    let mut m = f64::NEG_INFINITY;
                    for t in j * p..j * p + p {
                        m = m.max(x.data()[(bi * l + t) * c + ci]);
                    }
                    expected.push(m);
                }
            }
        }
        assert!(max_abs_diff(out.data(), &expected) <= TOL);
    }
}

pub fn dense_matches_naive_loops() {
    let mut rng = rng(202);
    for _ in 0..INSTANCES {
        let (b, i, o) = (
            rng.gen_range(1..5),
            rng.gen_range(1..40),
            rng.gen_range(1..11),
        );
        let w = uniform(&mut rng, &[o, i], -2.0, 2.0);
        let bias = uniform(&mut rng, &[o], -1.0, 1.0);
        let x = uniform(&mut rng, &[b, i], -3.0, 3.0);
        let (out, _) = Dense::new(w.clone(), bias.clone())
            .unwrap()
            .forward(&x)
            .unwrap();
        let mut expected = Vec::new();
        for bi in 0..b {
            for oi in 0..o {
                let mut acc = bias.data()[oi];
                for ii in 0..i {
                    acc += w.data()[oi * i + ii] * x.data()[bi * i + ii];
                }
                expected.push(acc);
            }
        }
        assert!(max_abs_diff(out.data(), &expected) <= TOL);
    }
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn lstm_cell_matches_naive_loops() {
    let mut rng = rng(203);
    for _ in 0..INSTANCES {
        let (b, d, h) = (
            rng.gen_range(1..4),
            rng.gen_range(1..9),
            rng.gen_range(1..6),
        );
        let w = uniform(&mut rng, &[4 * h, d], -1.0, 1.0);
        let u = uniform(&mut rng, &[4 * h, h], -1.0, 1.0);
        let bias = uniform(&mut rng, &[4 * h], -1.0, 1.0);
        let x = uniform(&mut rng, &[b, d], -2.0, 2.0);
        let h0 = uniform(&mut rng, &[b, h], -1.0, 1.0);
        let c0 = uniform(&mut rng, &[b, h], -1.0, 1.0);
        let cell = Lstm::new(w.clone(), u.clone(), bias.clone()).unwrap();
        let (h1, c1, _) = cell.step(&x, &h0, &c0).unwrap();

        let (mut eh, mut ec) = (Vec::new(), Vec::new());
        for bi in 0..b {
            let pre = |row: usize| {
                let mut a = bias.data()[row];
                for j in 0..d {
                    a += w.data()[row * d + j] * x.data()[bi * d + j];
                }
                for j in 0..h {
                    a += u.data()[row * h + j] * h0.data()[bi * h + j];
                }
                a
            };
            for k in 0..h {
                // gate order: input, forget, cell candidate, output
                let i = sig(pre(k));
                let f = sig(pre(h + k));
                let g = pre(2 * h + k).tanh();
                let o = sig(pre(3 * h + k));
                let c = f * c0.data()[bi * h + k] + i * g;
                ec.push(c);
                eh.push(o * c.tanh());
            }
        }
        assert!(max_abs_diff(c1.data(), &ec) <= TOL);
        assert!(max_abs_diff(h1.data(), &eh) <= TOL);
    }
}

fn naive_step(
    w: &[f64],
    u: &[f64],
    bias: &[f64],
    x: &[f64],
    h0: &[f64],
    c0: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let (hn, d) = (h0.len(), x.len());
    let pre = |row: usize| {
        bias[row]
            + (0..d).map(|j| w[row * d + j] * x[j]).sum::<f64>()
            + (0..hn).map(|j| u[row * hn + j] * h0[j]).sum::<f64>()
    };
    let mut h = Vec::new();
    let mut c = Vec::new();
    for k in 0..hn {
        let ck = sig(pre(hn + k)) * c0[k] + sig(pre(k)) * pre(2 * hn + k).tanh();
        h.push(sig(pre(3 * hn + k)) * ck.tanh());
        c.push(ck);
    }
    (h, c)
}

pub fn bilstm_two_steps_match_unrolled_oracle() {
    let mut rng = rng(204);
    for _ in 0..INSTANCES {
        let (d, h) = (rng.gen_range(1..5), rng.gen_range(1..4));
        let mut params = || {
            (
                uniform(&mut rng, &[4 * h, d], -1.0, 1.0),
                uniform(&mut rng, &[4 * h, h], -1.0, 1.0),
                uniform(&mut rng, &[4 * h], -1.0, 1.0),
            )
        };
        let (fw, fu, fb) = params();
        let (bw, bu, bb) = params();
        let net = lids::nn::BiLstm::new(
            Lstm::new(fw.clone(), fu.clone(), fb.clone()).unwrap(),
            Lstm::new(bw.clone(), bu.clone(), bb.clone()).unwrap(),
        )
        .unwrap();
        let x = uniform(&mut rng, &[1, 2, d], -2.0, 2.0);
        let (outputs, last, _) = net.forward(&x).unwrap();

        let (x0, x1) = (&x.data()[..d], &x.data()[d..]);
        let zero = vec![0.0; h];
        let (f1, fc1) = naive_step(fw.data(), fu.data(), fb.data(), x0, &zero, &zero);
        let (f2, _) = naive_step(fw.data(), fu.data(), fb.data(), x1, &f1, &fc1);
        let (b2, bc2) = naive_step(bw.data(), bu.data(), bb.data(), x1, &zero, &zero);
        let (b1, _) = naive_step(bw.data(), bu.data(), bb.data(), x0, &b2, &bc2);

        let expected_out: Vec<f64> = [&f1, &b1, &f2, &b2]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect();
        let expected_last: Vec<f64> = f2.iter().chain(&b1).copied().collect();
        assert!(max_abs_diff(outputs.data(), &expected_out) <= TOL);
        assert!(max_abs_diff(last.data(), &expected_last) <= TOL);
    }
}
