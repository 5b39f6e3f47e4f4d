//! Load CSVs in the published layout, fit the encoder on the training file,
//! and cache both encoded datasets.
//!
//! Uses the real files when `UNSW_NB15_DIR` points at a directory holding
//! `UNSW_NB15_training-set.csv` and `UNSW_NB15_testing-set.csv`; otherwise
//! writes synthetic stand-ins to a temporary directory first.

use std::path::PathBuf;

use lids::dataset::synth::{generate, SynthConfig};
use lids::dataset::{
    class_distribution, load_csv, read_cache, write_cache, AttackCategory, EncoderState,
    FeatureEncoder, LabelView, Provenance,
};

fn csv_paths(scratch: &std::path::Path) -> lids::Result<(PathBuf, PathBuf)> {
    if let Some(dir) = std::env::var_os("UNSW_NB15_DIR") {
        let dir = PathBuf::from(dir);
        return Ok((
            dir.join("UNSW_NB15_training-set.csv"),
            dir.join("UNSW_NB15_testing-set.csv"),
        ));
    }
    let train = scratch.join("train.csv");
    let test = scratch.join("test.csv");
    generate(&SynthConfig {
        rows: 1_500,
        seed: 1,
        ..Default::default()
    })?
    .write_csv(&train)?;
    generate(&SynthConfig {
        rows: 700,
        seed: 2,
        ..Default::default()
    })?
    .write_csv(&test)?;
    Ok((train, test))
}

/// Returns `(train rows, test rows)`.
pub fn run_example() -> lids::Result<(usize, usize)> {
    let scratch = std::env::temp_dir().join(format!("lids-prepare-{}", std::process::id()));
    std::fs::create_dir_all(&scratch).map_err(|e| lids::Error::Io {
        path: scratch.clone(),
        source: e,
    })?;
    let (train_csv, test_csv) = csv_paths(&scratch)?;

    let train_raw = load_csv(&train_csv)?;
    let test_raw = load_csv(&test_csv)?;
    let encoder = EncoderState::fit(&train_raw)?;
    let train = encoder.transform(&train_raw, Provenance::OfficialTrain)?;
    let test = encoder.transform(&test_raw, Provenance::OfficialTest)?;

    println!("train rows: {}  test rows: {}", train.len(), test.len());
    let tr = class_distribution(&train, LabelView::Multiclass);
    let te = class_distribution(&test, LabelView::Multiclass);
    for (c, name) in AttackCategory::names().iter().enumerate() {
        println!("  {name:<15} {:>7} {:>7}", tr[c], te[c]);
    }
    for (spec, enc) in encoder.schema.features.iter().zip(&encoder.features) {
        match enc {
            FeatureEncoder::Categorical { vocab } => println!(
                "{}: {} values, e.g. {:?}",
                spec.name,
                vocab.len(),
                &vocab[..vocab.len().min(3)]
            ),
            FeatureEncoder::Numeric { log: true, max, .. } => {
                println!("{}: log1p (max {max:.3})", spec.name)
            }
            FeatureEncoder::Numeric { .. } => {}
        }
    }

    let cache = scratch.join("train.lidsdata");
    write_cache(&cache, &train)?;
    assert_eq!(read_cache(&cache)?, train);
    println!("cache round-trip ok ({})", cache.display());
    let _ = std::fs::remove_dir_all(&scratch);
    Ok((train.len(), test.len()))
}

fn main() -> lids::Result<()> {
    run_example().map(|_| ())
}
