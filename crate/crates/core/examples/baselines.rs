//! Logistic regression and k-NN next to the CNN-BiLSTM, rendered as one
//! comparison table.

use lids::baselines::{logreg_fit, KnnIndex, LogRegConfig, DEFAULT_K};
use lids::dataset::synth::{generate, SynthConfig};
use lids::dataset::{split_random_stratified, EncoderState, Provenance};
use lids::metrics::{evaluate_labels, render_report, timed, MetricsReport, ReportFormat, Timing};
use lids::model::{predict_labels, train, Head, ModelConfig, TrainConfig};

pub fn run_example() -> lids::Result<Vec<MetricsReport>> {
    let raw = generate(&SynthConfig::balanced_binary(3_000, 8))?;
    let encoder = EncoderState::fit(&raw)?;
    let data = encoder.transform(&raw, Provenance::derived("synthetic, balanced"))?;
    let (train_set, test_set) = split_random_stratified(&data, 0.25, 8)?;
    let (x, y) = (train_set.features(), train_set.binary_labels());
    let truth = test_set.binary_labels();
    let mut reports = Vec::new();

    let (lr, lr_train) = timed(|| {
        logreg_fit(
            x,
            y,
            Head::Binary,
            &LogRegConfig {
                seed: 8,
                ..Default::default()
            },
        )
    });
    let lr = lr?;
    let (pred, lr_predict) = timed(|| lr.predict(test_set.features()));
    reports.push(
        evaluate_labels(Head::Binary, truth, &pred?)?
            .with_model("Logistic Regression")
            .with_timing(Timing {
                train_s: Some(lr_train),
                predict_s: Some(lr_predict),
            }),
    );

    let (knn, knn_train) = timed(|| KnnIndex::build(x, y, 2, DEFAULT_K));
    let knn = knn?;
    let (pred, knn_predict) = timed(|| knn.predict(test_set.features()));
    reports.push(
        evaluate_labels(Head::Binary, truth, &pred?)?
            .with_model("KNN")
            .with_timing(Timing {
                train_s: Some(knn_train),
                predict_s: Some(knn_predict),
            }),
    );

    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 64,
        seed: 8,
        ..TrainConfig::binary()
    };
    let (model, history) = train(&ModelConfig::binary(), &train_set, &cfg)?;
    let (pred, predict_s) = timed(|| predict_labels(&model, test_set.features(), 0.5));
    reports.push(
        evaluate_labels(Head::Binary, truth, &pred?)?
            .with_model("CNN-BiLSTM")
            .with_timing(Timing {
                train_s: Some(history.train_seconds),
                predict_s: Some(predict_s),
            }),
    );

    print!(
        "{}",
        render_report(&reports, ReportFormat::Text)?
            .split("\n\n")
            .next()
            .unwrap_or("")
    );
    println!();
    Ok(reports)
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
