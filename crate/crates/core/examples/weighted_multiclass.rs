//! Ten-way classification with inverse-frequency class weights on an
//! imbalanced synthetic mix shaped like the official training file.

use lids::dataset::synth::{generate, SynthConfig};
use lids::dataset::{
    class_distribution, split_random_stratified, EncoderState, LabelView, Provenance,
};
use lids::loss::inverse_frequency_weights;
use lids::metrics::{evaluate_labels, render_report, MetricsReport, ReportFormat};
use lids::model::{predict_labels, train, ModelConfig, TrainConfig};

pub fn run_example() -> lids::Result<MetricsReport> {
    let raw = generate(&SynthConfig {
        rows: 4_000,
        min_per_class: 20,
        separation: 2.0,
        seed: 21,
        ..Default::default()
    })?;
    let encoder = EncoderState::fit(&raw)?;
    let data = encoder.transform(&raw, Provenance::derived("synthetic, official class mix"))?;
    let (train_set, test_set) = split_random_stratified(&data, 0.25, 21)?;

    let counts = class_distribution(&train_set, LabelView::Multiclass);
    let weights = inverse_frequency_weights(&counts)?;
    println!("class counts:  {counts:?}");
    println!(
        "class weights: [{}]",
        weights
            .as_slice()
            .iter()
            .map(|w| format!("{w:.2}"))
            .collect::<Vec<_>>()
            .join(", ")
    );

    let cfg = TrainConfig {
        epochs: 8,
        batch_size: 64,
        learning_rate: 3e-3,
        seed: 21,
        ..TrainConfig::multiclass()
    };
    let (model, history) = train(&ModelConfig::multiclass(), &train_set, &cfg)?;
    println!(
        "final train loss {:.4}",
        history.epochs.last().map_or(f64::NAN, |e| e.train_loss)
    );

    let pred = predict_labels(&model, test_set.features(), 0.5)?;
    let report = evaluate_labels(model.head(), test_set.multiclass_labels(), &pred)?
        .with_model("CNN-BiLSTM");
    print!(
        "{}",
        render_report(std::slice::from_ref(&report), ReportFormat::Text)?
    );
    Ok(report)
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
