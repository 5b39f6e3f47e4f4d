//! One test per acceptance criterion; each prints a single PASS/FAIL line.
//!
//! Criteria 4, 5, 6, 7 and 9 need the UNSW-NB15 CSV files and are ignored by
//! default. Run them with
//!
//! ```text
//! UNSW_NB15_DIR=/path/to/csvs cargo test --release --test acceptance -- --ignored
//! ```

mod common;
#[allow(dead_code)]
#[path = "suites/gradients.rs"]
mod gradient_suite;
#[allow(dead_code)]
#[path = "suites/oracles.rs"]
mod oracle_suite;

use std::io::Write;
use std::panic::{catch_unwind, UnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use lids::baselines::{logreg_fit, KnnIndex, LogRegConfig, DEFAULT_K};
use lids::dataset::synth::{generate, SynthConfig};
use lids::dataset::{
    load_csv, split_tables, DataSplit, EncoderState, Provenance, RawTable, SplitPolicy,
};
use lids::metrics::{binary_metrics, evaluate_labels, timed, ConfusionMatrix, MetricsReport};
use lids::model::{
    decode_model, encode_model, predict_proba, train, ModelConfig, TrainConfig, Weighting,
};

const GRADIENT_SUITE_SECONDS: f64 = 60.0;
const ANCHOR_ACCURACY: f64 = 0.9729;
const ANCHOR_TOL: f64 = 1e-4;
const BINARY_MIN_ACCURACY: f64 = 0.95;
const BINARY_MAX_TRAIN_SECONDS: f64 = 30.0 * 60.0;
const BINARY_MAX_PREDICT_SECONDS: f64 = 60.0;
const OFFICIAL_MIN_ACCURACY: f64 = 0.85;
const MULTICLASS_MIN_F1: f64 = 0.93;
const MULTICLASS_MIN_ACCURACY: f64 = 0.93;
const PARAM_BUDGET: usize = 10_000;
const LOGREG_MIN_ACCURACY: f64 = 0.90;
const KNN_MIN_ACCURACY: f64 = 0.92;
const RANDOM_TEST_FRACTION: f64 = 0.2;
const SEEDS: [u64; 3] = [0, 1, 2];

fn verdict(n: usize, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {n:>2} [{}] {title}: {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    // written past the test harness's capture so the line always shows
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

type Check = (&'static str, Box<dyn FnOnce() + UnwindSafe>);

/// Runs each named check, collecting the names of those that panic.
fn failures(checks: Vec<Check>) -> Vec<&'static str> {
    checks
        .into_iter()
        .filter_map(|(name, f)| catch_unwind(f).is_err().then_some(name))
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn fmt_all(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{:.2}%", x * 100.0))
        .collect::<Vec<_>>()
        .join(", ")
}

#[test]
fn criterion_01_gradient_suite() {
    let start = Instant::now();
    let failed = failures(vec![
        ("conv1d", Box::new(gradient_suite::conv1d_gradients)),
        (
            "maxpool",
            Box::new(gradient_suite::maxpool_routing_gradients),
        ),
        ("dense", Box::new(gradient_suite::dense_gradients)),
        (
            "activations",
            Box::new(gradient_suite::activation_gradients),
        ),
        ("lstm_cell", Box::new(gradient_suite::lstm_cell_gradients)),
        ("bilstm", Box::new(gradient_suite::bilstm_unroll_gradients)),
        ("bce", Box::new(gradient_suite::bce_gradients)),
        (
            "categorical_ce",
            Box::new(gradient_suite::categorical_ce_gradients),
        ),
    ]);
    let secs = start.elapsed().as_secs_f64();
    verdict(
        1,
        "finite-difference gradient suite",
        failed.is_empty() && secs < GRADIENT_SUITE_SECONDS,
        &format!("8 groups, failures {failed:?}, {secs:.2}s (limit {GRADIENT_SUITE_SECONDS}s)"),
    );
}

#[test]
fn criterion_02_oracle_suite() {
    let failed = failures(vec![
        ("conv1d", Box::new(oracle_suite::conv1d_matches_naive_loops)),
        (
            "maxpool",
            Box::new(oracle_suite::maxpool_matches_naive_loops),
        ),
        ("dense", Box::new(oracle_suite::dense_matches_naive_loops)),
        (
            "lstm_cell",
            Box::new(oracle_suite::lstm_cell_matches_naive_loops),
        ),
    ]);
    verdict(
        2,
        "naive-loop oracle suite",
        failed.is_empty(),
        &format!("4 layers x 120 instances at 1e-12, failures {failed:?}"),
    );
}

#[test]
fn criterion_03_metrics_anchor() {
    let r = binary_metrics(&ConfusionMatrix::binary(7226, 8795, 174, 272)).unwrap();
    let pass = (r.accuracy - ANCHOR_ACCURACY).abs() <= ANCHOR_TOL
        && (r.precision - 0.97649).abs() < 1e-5
        && (r.recall - 0.96372).abs() < 1e-5;
    verdict(
        3,
        "binary metrics on the reference confusion counts",
        pass,
        &format!("accuracy {:.5} (target {ANCHOR_ACCURACY} ± {ANCHOR_TOL}), precision {:.5}, recall {:.5}", r.accuracy, r.precision, r.recall),
    );
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = lids::cli::run_with(
        std::iter::once("lids").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into_owned() + &String::from_utf8_lossy(&err),
    )
}

#[test]
fn criterion_08_size() {
    let dir = tempfile::tempdir().unwrap();
    let raw = generate(&SynthConfig {
        rows: 100,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let data = EncoderState::fit(&raw)
        .unwrap()
        .transform(&raw, Provenance::OfficialTrain)
        .unwrap();
    let mut details = Vec::new();
    let mut pass = true;
    for (config, expected) in [
        (ModelConfig::binary(), 6433usize),
        (ModelConfig::multiclass(), 6730),
    ] {
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 50,
            ..TrainConfig::for_head(config.head)
        };
        let (model, _) = train(&config, &data, &cfg).unwrap();
        let bytes = encode_model(&model).unwrap();
        let (header, start) = lids::model::decode_header(&bytes).unwrap();
        let serialized = (bytes.len() - start - 4) / 4;
        let path = dir.path().join(format!("{}.lids", config.head.name()));
        lids::model::save(&model, &path).unwrap();
        let (code, text) = cli(&["inspect", "--model", path.to_str().unwrap()]);
        let reported = text
            .lines()
            .find_map(|l| l.strip_prefix("parameters: "))
            .and_then(|v| v.trim().parse::<usize>().ok());
        pass &= code == 0
            && reported == Some(expected)
            && config.param_count() == expected
            && header.param_count() == expected
            && serialized == expected
            && expected < PARAM_BUDGET;
        details.push(format!(
            "{}: inspect {reported:?}, closed form {}, serialized {serialized}",
            config.head.name(),
            config.param_count()
        ));
    }
    verdict(
        8,
        "parameter budget",
        pass,
        &format!("{} (budget < {PARAM_BUDGET})", details.join("; ")),
    );
}

#[test]
fn criterion_10_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let train_csv = dir.path().join("train.csv");
    generate(&SynthConfig {
        rows: 600,
        seed: 10,
        ..Default::default()
    })
    .unwrap()
    .write_csv(&train_csv)
    .unwrap();
    let mut files = Vec::new();
    for name in ["a.lids", "b.lids"] {
        let path = dir.path().join(name);
        let args = [
            "train",
            "--train-csv",
            train_csv.to_str().unwrap(),
            "--seed",
            "7",
            "--epochs",
            "2",
            "--threads",
            "1",
            "--deterministic",
            "--out",
            path.to_str().unwrap(),
        ];
        let (code, text) = cli(&args);
        assert_eq!(code, 0, "{text}");
        files.push(std::fs::read(&path).unwrap());
    }
    let identical_files = files[0] == files[1];

    let model = decode_model(&files[0]).unwrap();
    let back = decode_model(&encode_model(&model).unwrap()).unwrap();
    let raw = load_csv(&train_csv).unwrap();
    let x = model.encode(&raw).unwrap();
    let bits = |m| {
        predict_proba(m, &x)
            .unwrap()
            .data()
            .iter()
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    let identical_predictions = bits(&model) == bits(&back);
    verdict(
        10,
        "determinism",
        identical_files && identical_predictions,
        &format!("two --threads 1 --deterministic runs identical: {identical_files}; load(save(m)) predictions bitwise equal: {identical_predictions}"),
    );
}

// Criteria below need the real dataset.

fn dataset() -> &'static (RawTable, RawTable) {
    static DATA: OnceLock<(RawTable, RawTable)> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = std::env::var_os("UNSW_NB15_DIR").map(PathBuf::from).unwrap_or_else(|| {
            let _ = std::io::stdout().lock().write_all(b"UNSW_NB15_DIR is not set\n");
            panic!("set UNSW_NB15_DIR to the directory holding the UNSW-NB15 training and testing CSV files");
        });
        (
            load_csv(dir.join("UNSW_NB15_training-set.csv")).unwrap(),
            load_csv(dir.join("UNSW_NB15_testing-set.csv")).unwrap(),
        )
    })
}

fn split(policy: SplitPolicy, seed: u64) -> DataSplit {
    let (train, test) = dataset();
    split_tables(train, test, policy, seed, None).unwrap()
}

struct Run {
    report: MetricsReport,
    train_s: f64,
    predict_s: f64,
}

fn run(config: &ModelConfig, weighting: Weighting, data: &DataSplit, seed: u64) -> Run {
    let cfg = TrainConfig {
        seed,
        weighting,
        ..TrainConfig::for_head(config.head)
    };
    let (model, history) = train(config, &data.train, &cfg).unwrap();
    let (pred, predict_s) =
        timed(|| lids::model::predict_labels(&model, data.test.features(), 0.5).unwrap());
    let report = evaluate_labels(
        config.head,
        data.test.labels(config.head.label_view()),
        &pred,
    )
    .unwrap();
    Run {
        report,
        train_s: history.train_seconds,
        predict_s,
    }
}

fn multiclass_runs(weighting: Weighting) -> &'static Vec<Run> {
    static WEIGHTED: OnceLock<Vec<Run>> = OnceLock::new();
    static UNIFORM: OnceLock<Vec<Run>> = OnceLock::new();
    let cell = if weighting == Weighting::InverseFrequency {
        &WEIGHTED
    } else {
        &UNIFORM
    };
    cell.get_or_init(|| {
        SEEDS
            .iter()
            .map(|&s| {
                run(
                    &ModelConfig::multiclass(),
                    weighting,
                    &split(SplitPolicy::Random(RANDOM_TEST_FRACTION), s),
                    s,
                )
            })
            .collect()
    })
}

#[test]
#[ignore = "needs the UNSW-NB15 CSV files; set UNSW_NB15_DIR"]
fn criterion_04_binary_random_split() {
    let runs: Vec<Run> = SEEDS
        .iter()
        .map(|&s| {
            run(
                &ModelConfig::binary(),
                Weighting::Uniform,
                &split(SplitPolicy::Random(RANDOM_TEST_FRACTION), s),
                s,
            )
        })
        .collect();
    let acc: Vec<f64> = runs.iter().map(|r| r.report.accuracy).collect();
    let max_train = runs.iter().map(|r| r.train_s).fold(0.0, f64::max);
    let max_predict = runs.iter().map(|r| r.predict_s).fold(0.0, f64::max);
    let med = median(acc.clone());
    verdict(
        4,
        "binary, random stratified 80/20",
        med >= BINARY_MIN_ACCURACY && max_train < BINARY_MAX_TRAIN_SECONDS && max_predict < BINARY_MAX_PREDICT_SECONDS,
        &format!(
            "median accuracy {:.2}% (min {:.1}%) over [{}]; slowest train {max_train:.0}s, predict {max_predict:.1}s",
            med * 100.0,
            BINARY_MIN_ACCURACY * 100.0,
            fmt_all(&acc)
        ),
    );
}

#[test]
#[ignore = "needs the UNSW-NB15 CSV files; set UNSW_NB15_DIR"]
fn criterion_05_official_split() {
    let r = run(
        &ModelConfig::binary(),
        Weighting::Uniform,
        &split(SplitPolicy::Official, 0),
        0,
    );
    verdict(
        5,
        "binary, official train/test files",
        r.report.accuracy >= OFFICIAL_MIN_ACCURACY,
        &format!(
            "accuracy {:.2}% (min {:.1}%)",
            r.report.accuracy * 100.0,
            OFFICIAL_MIN_ACCURACY * 100.0
        ),
    );
}

#[test]
#[ignore = "needs the UNSW-NB15 CSV files; set UNSW_NB15_DIR"]
fn criterion_06_multiclass_random_split() {
    let runs = multiclass_runs(Weighting::InverseFrequency);
    let f1: Vec<f64> = runs.iter().map(|r| r.report.weighted_avg.f1).collect();
    let acc: Vec<f64> = runs.iter().map(|r| r.report.accuracy).collect();
    let (mf1, macc) = (median(f1.clone()), median(acc.clone()));
    verdict(
        6,
        "multiclass, inverse-frequency weights, random split",
        mf1 >= MULTICLASS_MIN_F1 && macc >= MULTICLASS_MIN_ACCURACY,
        &format!(
            "median weighted F1 {:.2}% [{}], median accuracy {:.2}% [{}]",
            mf1 * 100.0,
            fmt_all(&f1),
            macc * 100.0,
            fmt_all(&acc)
        ),
    );
}

#[test]
#[ignore = "needs the UNSW-NB15 CSV files; set UNSW_NB15_DIR"]
fn criterion_07_imbalance_weighting() {
    let recall = |w| {
        median(
            multiclass_runs(w)
                .iter()
                .map(|r| r.report.macro_avg.recall)
                .collect(),
        )
    };
    let (weighted, uniform) = (
        recall(Weighting::InverseFrequency),
        recall(Weighting::Uniform),
    );
    verdict(
        7,
        "inverse-frequency vs uniform macro recall",
        weighted >= uniform,
        &format!(
            "median macro recall {:.2}% weighted vs {:.2}% uniform",
            weighted * 100.0,
            uniform * 100.0
        ),
    );
}

#[test]
#[ignore = "needs the UNSW-NB15 CSV files; set UNSW_NB15_DIR"]
fn criterion_09_baselines() {
    let data = split(SplitPolicy::Random(RANDOM_TEST_FRACTION), 0);
    let (x, y, truth) = (
        data.train.features(),
        data.train.binary_labels(),
        data.test.binary_labels(),
    );
    let lr = logreg_fit(x, y, lids::model::Head::Binary, &LogRegConfig::default()).unwrap();
    let lr_acc = evaluate_labels(
        lids::model::Head::Binary,
        truth,
        &lr.predict(data.test.features()).unwrap(),
    )
    .unwrap()
    .accuracy;
    let knn = KnnIndex::build(x, y, 2, DEFAULT_K).unwrap();
    let (pred, knn_s) = timed(|| knn.predict(data.test.features()).unwrap());
    let knn_acc = evaluate_labels(lids::model::Head::Binary, truth, &pred)
        .unwrap()
        .accuracy;
    verdict(
        9,
        "baselines on the random split",
        lr_acc >= LOGREG_MIN_ACCURACY && knn_acc >= KNN_MIN_ACCURACY,
        &format!(
            "logistic regression {:.2}% (min {:.0}%), KNN k={DEFAULT_K} {:.2}% (min {:.0}%, predict {knn_s:.1}s)",
            lr_acc * 100.0,
            LOGREG_MIN_ACCURACY * 100.0,
            knn_acc * 100.0,
            KNN_MIN_ACCURACY * 100.0
        ),
    );
}
