//! Train the binary CNN-BiLSTM on synthetic UNSW-shaped records and score it
//! on a held-out split.
//!
//! ```text
//! cargo run --release --example train_binary
//! ```

use lids::dataset::synth::{generate, SynthConfig};
use lids::dataset::{split_random_stratified, EncoderState, Provenance};
use lids::metrics::{evaluate_labels, render_report, timed, MetricsReport, ReportFormat, Timing};
use lids::model::{predict_labels, train, ModelConfig, TrainConfig};

pub fn run_example() -> lids::Result<MetricsReport> {
    let raw = generate(&SynthConfig::balanced_binary(3_000, 11))?;
    let encoder = EncoderState::fit(&raw)?;
    let data = encoder.transform(&raw, Provenance::derived("synthetic, balanced"))?;
    let (train_set, test_set) = split_random_stratified(&data, 0.25, 11)?;

    let config = ModelConfig::binary();
    let train_cfg = TrainConfig {
        epochs: 6,
        batch_size: 64,
        seed: 11,
        ..TrainConfig::binary()
    };
    println!("parameters: {}", config.param_count());
    let (model, history) = train(&config, &train_set, &train_cfg)?;
    for e in &history.epochs {
        println!(
            "epoch {}  loss {:.4}  val acc {:.3}",
            e.epoch,
            e.train_loss,
            e.val_accuracy.unwrap_or(f64::NAN)
        );
    }

    let (pred, predict_s) = timed(|| predict_labels(&model, test_set.features(), 0.5));
    let report = evaluate_labels(model.head(), test_set.binary_labels(), &pred?)?
        .with_model("CNN-BiLSTM")
        .with_timing(Timing {
            train_s: Some(history.train_seconds),
            predict_s: Some(predict_s),
        });
    print!(
        "{}",
        render_report(std::slice::from_ref(&report), ReportFormat::Text)?
    );
    Ok(report)
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
