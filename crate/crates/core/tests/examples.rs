//! Every example compiles as part of the test suite and its `run_example`
//! result is checked here.

#[allow(dead_code)]
#[path = "../examples/baselines.rs"]
mod baselines;
#[allow(dead_code)]
#[path = "../examples/cli_workflow.rs"]
mod cli_workflow;
#[allow(dead_code)]
#[path = "../examples/gradient_check.rs"]
mod gradient_check;
#[allow(dead_code)]
#[path = "../examples/layer_tour.rs"]
mod layer_tour;
#[allow(dead_code)]
#[path = "../examples/model_roundtrip.rs"]
mod model_roundtrip;
#[allow(dead_code)]
#[path = "../examples/official_split.rs"]
mod official_split;
#[allow(dead_code)]
#[path = "../examples/prepare_dataset.rs"]
mod prepare_dataset;
#[allow(dead_code)]
#[path = "../examples/train_binary.rs"]
mod train_binary;
#[allow(dead_code)]
#[path = "../examples/weighted_multiclass.rs"]
mod weighted_multiclass;

#[test]
fn train_binary_learns_the_synthetic_task() {
    let report = train_binary::run_example().unwrap();
    assert!(report.accuracy > 0.9, "accuracy {}", report.accuracy);
    assert!(report.timing.train_s.is_some());
}

#[test]
fn layer_tour_shapes() {
    let shapes = layer_tour::run_example().unwrap();
    assert_eq!(shapes.first().unwrap(), &vec![1, 42, 1]);
    assert!(shapes.contains(&vec![1, 21, 32]));
    assert!(shapes.contains(&vec![1, 32]));
}

#[test]
fn gradient_check_agrees_with_finite_differences() {
    let worst = gradient_check::run_example().unwrap();
    assert!(worst < 1e-3, "worst relative error {worst}");
}

#[test]
fn prepare_dataset_produces_both_sides() {
    let (train, test) = prepare_dataset::run_example().unwrap();
    assert!(train > 0 && test > 0);
}

#[test]
fn weighted_multiclass_beats_chance() {
    let report = weighted_multiclass::run_example().unwrap();
    assert_eq!(report.per_class.len(), 10);
    assert!(report.accuracy > 0.3, "accuracy {}", report.accuracy);
}

#[test]
fn baselines_report_three_models() {
    let reports = baselines::run_example().unwrap();
    let names: Vec<&str> = reports.iter().map(|r| r.model.as_str()).collect();
    assert_eq!(names, ["Logistic Regression", "KNN", "CNN-BiLSTM"]);
    assert!(reports.iter().all(|r| r.accuracy > 0.8));
}

#[test]
fn model_roundtrip_detects_damage() {
    model_roundtrip::run_example().unwrap();
}

#[test]
fn cli_workflow_runs_every_command() {
    let inspect = cli_workflow::run_example().unwrap();
    assert!(inspect.contains("parameters: 6433"), "{inspect}");
}

#[test]
fn official_split_needs_the_dataset() {
    let report = official_split::run_example().unwrap();
    assert_eq!(
        report.is_some(),
        std::env::var_os("UNSW_NB15_DIR").is_some()
    );
}
