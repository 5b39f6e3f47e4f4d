mod common;

use lids::baselines::{
    knn_predict, logreg_fit, logreg_predict, KnnIndex, LogRegConfig, LogRegModel,
};
use lids::dataset::synth::{generate, SynthConfig};
use lids::dataset::{EncoderState, Provenance};
use lids::loss::ClassWeights;
use lids::model::{Head, Weighting};
use lids::Tensor;
use rand::Rng;

fn rows(points: &[&[f32]]) -> Tensor<f32> {
    Tensor::new(
        vec![points.len(), points[0].len()],
        points.iter().flat_map(|p| p.iter().copied()).collect(),
    )
    .unwrap()
}

#[test]
fn logreg_gradient_matches_finite_differences() {
    let mut rng = common::rng(1);
    for head in [Head::Binary, Head::Multiclass] {
        for _ in 0..5 {
            let (n, d) = (rng.gen_range(1..8), rng.gen_range(1..6));
            let mut model = LogRegModel::zeros(head, d);
            let out = head.width();
            model.weights = common::uniform(&mut rng, &[out, d], -1.0, 1.0);
            model.bias = common::uniform(&mut rng, &[out], -1.0, 1.0);
            let x: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<u8> = (0..n)
                .map(|_| rng.gen_range(0..head.classes() as u8))
                .collect();
            let w = ClassWeights::new(
                (0..head.classes())
                    .map(|_| rng.gen_range(0.2..3.0))
                    .collect(),
            )
            .unwrap();
            let (_, gw, gb) = model.loss_and_grad(&x, &y, &w).unwrap();
            let loss = |m: &LogRegModel| m.loss_and_grad(&x, &y, &w).unwrap().0;
            let worst_w = common::fd_check(&model, |m| &mut m.weights, loss, &gw);
            let worst_b = common::fd_check(&model, |m| &mut m.bias, loss, &gb);
            assert!(
                worst_w < common::FD_REL_TOL && worst_b < common::FD_REL_TOL,
                "{head:?}: {worst_w} {worst_b}"
            );
        }
    }
}

#[test]
fn logreg_loss_never_rises_on_a_convex_toy() {
    let mut rng = common::rng(2);
    let n = 200;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let y = (i % 2) as u8;
        // overlapping clusters keep the optimum finite
        let centre = if y == 1 { 0.6 } else { 0.4 };
        data.push(rng.gen_range(centre - 0.3..centre + 0.3));
        data.push(rng.gen_range(0.0..1.0f32));
        labels.push(y);
    }
    let x = Tensor::new(vec![n, 2], data).unwrap();
    for lr in [0.01, 0.05, 0.1] {
        let cfg = LogRegConfig {
            epochs: 40,
            learning_rate: lr,
            batch_size: n,
            ..Default::default()
        };
        let model = logreg_fit(&x, &labels, Head::Binary, &cfg).unwrap();
        for w in model.loss_history.windows(2) {
            assert!(w[1] <= w[0], "lr {lr}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn logreg_separable_one_feature() {
    let x = rows(&[&[0.0], &[0.1], &[0.2], &[0.8], &[0.9], &[1.0]]);
    let y = [0, 0, 0, 1, 1, 1];
    let cfg = LogRegConfig {
        epochs: 500,
        learning_rate: 0.5,
        batch_size: 6,
        ..Default::default()
    };
    let model = logreg_fit(&x, &y, Head::Binary, &cfg).unwrap();
    assert!(model.trained);
    assert_eq!(logreg_predict(&model, &x).unwrap(), y);
}

#[test]
fn logreg_is_deterministic_and_weights_apply() {
    let raw = generate(&SynthConfig {
        rows: 300,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let ds = EncoderState::fit(&raw)
        .unwrap()
        .transform(&raw, Provenance::OfficialTrain)
        .unwrap();
    let cfg = LogRegConfig {
        epochs: 3,
        seed: 3,
        weighting: Weighting::InverseFrequency,
        ..Default::default()
    };
    let a = logreg_fit(
        ds.features(),
        ds.multiclass_labels(),
        Head::Multiclass,
        &cfg,
    )
    .unwrap();
    let b = logreg_fit(
        ds.features(),
        ds.multiclass_labels(),
        Head::Multiclass,
        &cfg,
    )
    .unwrap();
    assert_eq!(a, b);
    let c = logreg_fit(
        ds.features(),
        ds.multiclass_labels(),
        Head::Multiclass,
        &LogRegConfig {
            weighting: Weighting::Uniform,
            ..cfg
        },
    )
    .unwrap();
    assert_ne!(a.weights, c.weights);
    assert!(logreg_fit(
        ds.features(),
        ds.multiclass_labels(),
        Head::Multiclass,
        &LogRegConfig { epochs: 0, ..cfg }
    )
    .is_err());
}

#[test]
fn knn_one_neighbour_reproduces_training_labels() {
    let mut rng = common::rng(4);
    let n = 150;
    let x = Tensor::from_fn(&[n, 42, 1], |_| rng.gen_range(0.0..1.0f32));
    let y: Vec<u8> = (0..n).map(|_| rng.gen_range(0..10)).collect();
    let index = KnnIndex::build(&x, &y, 10, 1).unwrap();
    assert_eq!(knn_predict(&index, &x).unwrap(), y);
}

#[test]
fn knn_with_every_neighbour_votes_the_global_majority() {
    let x = rows(&[
        &[0.0, 0.0],
        &[0.1, 0.1],
        &[5.0, 5.0],
        &[5.1, 5.0],
        &[5.0, 5.1],
    ]);
    let y = [0, 0, 1, 1, 1];
    let index = KnnIndex::build(&x, &y, 2, 5).unwrap();
    assert_eq!(
        knn_predict(&index, &rows(&[&[0.0, 0.0], &[9.0, 9.0]])).unwrap(),
        [1, 1]
    );
    // a 2-2 tie between classes 1 and 2 resolves to class 1
    let index = KnnIndex::build(
        &rows(&[&[0.0], &[1.0], &[2.0], &[3.0]]),
        &[1, 2, 2, 1],
        3,
        4,
    )
    .unwrap();
    assert_eq!(index.predict(&rows(&[&[1.5]])).unwrap(), [1]);
}

#[test]
fn knn_query_between_clusters_takes_the_nearer() {
    let x = rows(&[
        &[0.0, 0.0],
        &[0.0, 1.0],
        &[1.0, 0.0],
        &[4.0, 4.0],
        &[4.0, 5.0],
        &[5.0, 4.0],
    ]);
    let index = KnnIndex::build(&x, &[0, 0, 0, 1, 1, 1], 2, 3).unwrap();
    // (1.5, 1.5) is at most 1.6 from the first cluster and at least 3.5 from the second
    assert_eq!(
        index.predict(&rows(&[&[1.5, 1.5], &[3.0, 3.0]])).unwrap(),
        [0, 1]
    );
    assert_eq!(index.neighbours(&[1.5, 1.5]).len(), 3);
    assert!(index.predict(&rows(&[&[1.0, 2.0, 3.0]])).is_err());
}
