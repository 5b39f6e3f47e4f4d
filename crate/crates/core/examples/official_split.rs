//! The full binary protocol on the official UNSW-NB15 files: default model,
//! default training, evaluation on the official testing set.
//!
//! Set `UNSW_NB15_DIR` to a directory containing `UNSW_NB15_training-set.csv`
//! and `UNSW_NB15_testing-set.csv`. Without it the example only says so.

use std::path::PathBuf;

use lids::dataset::{load_csv, split_tables, SplitPolicy};
use lids::metrics::{evaluate_labels, render_report, timed, MetricsReport, ReportFormat, Timing};
use lids::model::{predict_labels, train, ModelConfig, TrainConfig};

pub fn run_example() -> lids::Result<Option<MetricsReport>> {
    let Some(dir) = std::env::var_os("UNSW_NB15_DIR").map(PathBuf::from) else {
        println!("UNSW_NB15_DIR is not set; nothing to do");
        return Ok(None);
    };
    let seed = std::env::var("LIDS_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let train_raw = load_csv(dir.join("UNSW_NB15_training-set.csv"))?;
    let test_raw = load_csv(dir.join("UNSW_NB15_testing-set.csv"))?;
    let split = split_tables(&train_raw, &test_raw, SplitPolicy::Official, seed, None)?;
    println!("train {} / test {}", split.train.len(), split.test.len());

    let cfg = TrainConfig {
        seed,
        ..TrainConfig::binary()
    };
    let (model, history) = train(&ModelConfig::binary(), &split.train, &cfg)?;
    let (pred, predict_s) = timed(|| predict_labels(&model, split.test.features(), 0.5));
    let report = evaluate_labels(model.head(), split.test.binary_labels(), &pred?)?
        .with_model("CNN-BiLSTM")
        .with_timing(Timing {
            train_s: Some(history.train_seconds),
            predict_s: Some(predict_s),
        });
    print!(
        "{}",
        render_report(std::slice::from_ref(&report), ReportFormat::Text)?
    );
    Ok(Some(report))
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
