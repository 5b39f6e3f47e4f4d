//! Central finite differences against the analytic gradient of the whole
//! network, in double precision.

use lids::loss::ClassWeights;
use lids::model::{loss_and_grads, ModelConfig, Network, PARAM_NAMES};
use lids::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;

/// Returns the worst relative error seen.
pub fn run_example() -> lids::Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let config = ModelConfig::multiclass();
    let net: Network<f64> = Network::build(&config, 5)?.cast();
    let x = Tensor::from_fn(&[3, 42, 1], |_| rng.gen::<f64>());
    let labels = [0u8, 4, 9];
    let weights = ClassWeights::new((0..10).map(|c| 1.0 + c as f64 / 10.0).collect())?;

    let loss = |n: &Network<f64>| {
        loss_and_grads(n, &x, &labels, &weights, None, labels.len()).map(|(l, _)| l)
    };
    let (_, grads) = loss_and_grads(&net, &x, &labels, &weights, None, labels.len())?;

    let mut worst = 0.0f64;
    for (p, name) in PARAM_NAMES.iter().enumerate() {
        let mut layer_worst = 0.0f64;
        for _ in 0..5 {
            let i = rng.gen_range(0..grads[p].len());
            let mut plus = net.clone();
            plus.params_mut()[p].data_mut()[i] += STEP;
            let mut minus = net.clone();
            minus.params_mut()[p].data_mut()[i] -= STEP;
            let numeric = (loss(&plus)? - loss(&minus)?) / (2.0 * STEP);
            let analytic = grads[p].data()[i];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
            layer_worst = layer_worst.max(rel);
        }
        println!("{name:<28} {layer_worst:.2e}");
        worst = worst.max(layer_worst);
    }
    println!("worst relative error: {worst:.2e}");
    Ok(worst)
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
