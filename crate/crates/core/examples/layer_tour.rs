//! Push one record through each layer by hand and print the shapes and
//! parameter counts along the way.

use lids::dataset::NUM_FEATURES;
use lids::model::{ModelConfig, Network, PARAM_NAMES};
use lids::nn::{Activation, MaxPool1d};
use lids::Tensor;

pub fn run_example() -> lids::Result<Vec<Vec<usize>>> {
    let net = Network::build(&ModelConfig::binary(), 3)?;
    let x = Tensor::from_fn(&[1, NUM_FEATURES, 1], |i| {
        (i as f32 / NUM_FEATURES as f32).sin().abs()
    });

    let (conv, bilstm, dense) = (net.conv(), net.bilstm(), net.dense());
    let pool = MaxPool1d::new(2)?;

    let (c, _) = conv.forward(&x)?;
    let a = Activation::Relu.forward(&c);
    let (p, _) = pool.forward(&a)?;
    let (seq, last, _) = bilstm.forward(&p)?;
    let (logit, _) = dense.forward(&last)?;
    let prob = Activation::Sigmoid.forward(&logit);

    let shapes: Vec<Vec<usize>> = [&x, &c, &p, &seq, &last, &prob]
        .iter()
        .map(|t| t.shape().to_vec())
        .collect();
    for (name, s) in [
        "input",
        "conv1d+relu",
        "maxpool",
        "bilstm seq",
        "bilstm final",
        "sigmoid",
    ]
    .iter()
    .zip(&shapes)
    {
        println!("{name:<14} {s:?}");
    }
    println!(
        "params: conv {} + bilstm {} + dense {} = {}",
        conv.param_count(),
        bilstm.param_count(),
        dense.param_count(),
        conv.param_count() + bilstm.param_count() + dense.param_count()
    );

    let net = Network::build(&ModelConfig::multiclass(), 3)?;
    for (name, shape) in PARAM_NAMES.iter().zip(net.param_shapes()) {
        println!("  {name:<28} {shape:?}");
    }
    println!("multiclass parameters: {}", net.param_count());
    Ok(shapes)
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
