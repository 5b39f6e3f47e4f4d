#![allow(dead_code)]

use lids::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(shape, |_| rng.gen_range(lo..hi))
}

/// `Σ a ⊙ b`, the scalar probe used to turn a layer output into a loss.
pub fn probe(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Relative error with a floor on the denominator so that near-zero
/// gradients are compared absolutely.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Central differences of `loss` with respect to every entry of the tensor
/// selected by `slot`, compared against `analytic`. Returns the worst
/// relative error.
pub fn fd_check<M: Clone>(
    model: &M,
    slot: impl Fn(&mut M) -> &mut Tensor<f64>,
    loss: impl Fn(&M) -> f64,
    analytic: &Tensor<f64>,
) -> f64 {
    let mut worst = 0.0f64;
    let n = analytic.len();
    for i in 0..n {
        let mut plus = model.clone();
        slot(&mut plus).data_mut()[i] += FD_STEP;
        let mut minus = model.clone();
        slot(&mut minus).data_mut()[i] -= FD_STEP;
        let numeric = (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP);
        worst = worst.max(rel_err(analytic.data()[i], numeric));
    }
    worst
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
