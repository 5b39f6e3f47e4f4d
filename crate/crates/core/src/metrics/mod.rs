//! Confusion matrices, classification metrics and report rendering.

mod report;

pub use report::{render_report, ReportFormat};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{binary_class_names, AttackCategory};
use crate::error::{Error, Result};
use crate::model::Head;

/// Counts indexed `[actual][predicted]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_names: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

/// Default display names for a class count.
pub fn default_class_names(classes: usize) -> Vec<String> {
    match classes {
        2 => binary_class_names(),
        10 => AttackCategory::names(),
        c => (0..c).map(|i| format!("class {i}")).collect(),
    }
}

impl ConfusionMatrix {
    pub fn from_labels(actual: &[u8], predicted: &[u8], classes: usize) -> Result<Self> {
        Self::with_names(actual, predicted, default_class_names(classes))
    }

    pub fn with_names(actual: &[u8], predicted: &[u8], class_names: Vec<String>) -> Result<Self> {
        let c = class_names.len();
        if c < 2 {
            return Err(Error::InvalidConfig(format!(
                "a confusion matrix needs at least 2 classes, got {c}"
            )));
        }
        if actual.len() != predicted.len() {
            return Err(Error::shape(
                "confusion_matrix",
                "samples",
                actual.len(),
                predicted.len(),
            ));
        }
        if actual.is_empty() {
            return Err(Error::Empty("confusion matrix input"));
        }
        let mut counts = vec![vec![0u64; c]; c];
        for (&a, &p) in actual.iter().zip(predicted) {
            for label in [a, p] {
                if label as usize >= c {
                    return Err(Error::LabelOutOfRange {
                        label: label as usize,
                        classes: c,
                    });
                }
            }
            counts[a as usize][p as usize] += 1;
        }
        Ok(Self {
            class_names,
            counts,
        })
    }

    pub fn from_counts(counts: Vec<Vec<u64>>, class_names: Vec<String>) -> Result<Self> {
        let c = class_names.len();
        if c < 2 || counts.len() != c || counts.iter().any(|r| r.len() != c) {
            return Err(Error::InvalidConfig(format!(
                "confusion counts must be {c}x{c} with at least 2 classes"
            )));
        }
        Ok(Self {
            class_names,
            counts,
        })
    }

    /// Binary matrix from TP/TN/FP/FN with attack as the positive class.
    pub fn binary(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        Self {
            class_names: binary_class_names(),
            counts: vec![vec![tn, fp], vec![fn_, tp]],
        }
    }

    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|r| r[class]).sum()
    }

    /// Applies the same permutation to rows, columns and names:
    /// new class `i` is old class `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            class_names: perm.iter().map(|&p| self.class_names[p].clone()).collect(),
            counts: perm
                .iter()
                .map(|&r| perm.iter().map(|&c| self.counts[r][c]).collect())
                .collect(),
        }
    }
}

/// `num / den`, or 0 and a raised flag when `den` is zero.
fn ratio(num: u64, den: u64, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Metrics whose denominator was zero and were reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_division: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_s: Option<f64>,
    pub predict_s: Option<f64>,
}

impl Timing {
    pub fn total_s(&self) -> Option<f64> {
        match (self.train_s, self.predict_s) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0.0) + b.unwrap_or(0.0)),
        }
    }
}

/// Headline precision/recall/F1 are for the attack class (binary) or the
/// support-weighted average (multiclass).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub task: Head,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub per_class: Vec<ClassMetrics>,
    pub confusion_matrix: ConfusionMatrix,
    pub timing: Timing,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub zero_division: Vec<String>,
}

impl MetricsReport {
    pub fn with_model(mut self, name: impl Into<String>) -> Self {
        self.model = name.into();
        self
    }

    pub fn with_timing(mut self, timing: Timing) -> Self {
        self.timing = timing;
        self
    }
}

fn per_class(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..cm.classes())
        .map(|c| {
            let tp = cm.counts[c][c];
            let (mut pz, mut rz) = (false, false);
            let precision = ratio(tp, cm.col_sum(c), &mut pz);
            let recall = ratio(tp, cm.row_sum(c), &mut rz);
            let mut zero_division = Vec::new();
            if pz {
                zero_division.push("precision".to_string());
            }
            if rz {
                zero_division.push("recall".to_string());
            }
            if precision + recall == 0.0 {
                zero_division.push("f1".to_string());
            }
            ClassMetrics {
                name: cm.class_names[c].clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support: cm.row_sum(c),
                zero_division,
            }
        })
        .collect()
}

fn averages(classes: &[ClassMetrics], total: u64) -> (Averages, Averages) {
    let n = classes.len() as f64;
    let macro_avg = Averages {
        precision: classes.iter().map(|c| c.precision).sum::<f64>() / n,
        recall: classes.iter().map(|c| c.recall).sum::<f64>() / n,
        f1: classes.iter().map(|c| c.f1).sum::<f64>() / n,
    };
    let w = |f: fn(&ClassMetrics) -> f64| -> f64 {
        if total == 0 {
            0.0
        } else {
            classes.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / total as f64
        }
    };
    let weighted_avg = Averages {
        precision: w(|c| c.precision),
        recall: w(|c| c.recall),
        f1: w(|c| c.f1),
    };
    (macro_avg, weighted_avg)
}

/// Binary metrics with attack (class 1) as the positive class.
pub fn binary_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    if cm.classes() != 2 {
        return Err(Error::InvalidConfig(format!(
            "binary metrics need 2 classes, got {}",
            cm.classes()
        )));
    }
    let (tn, fp, fn_, tp) = (
        cm.counts[0][0],
        cm.counts[0][1],
        cm.counts[1][0],
        cm.counts[1][1],
    );
    let mut zero_division = Vec::new();
    let mut flag = false;
    let accuracy = ratio(tp + tn, tp + tn + fp + fn_, &mut flag);
    if flag {
        zero_division.push("accuracy".to_string());
    }
    let mut flag = false;
    let precision = ratio(tp, tp + fp, &mut flag);
    if flag {
        zero_division.push("precision".to_string());
    }
    let mut flag = false;
    let recall = ratio(tp, tp + fn_, &mut flag);
    if flag {
        zero_division.push("recall".to_string());
    }
    if precision + recall == 0.0 {
        zero_division.push("f1".to_string());
    }
    let classes = per_class(cm);
    let (macro_avg, weighted_avg) = averages(&classes, cm.total());
    Ok(MetricsReport {
        model: String::new(),
        task: Head::Binary,
        accuracy,
        precision,
        recall,
        f1: f1(precision, recall),
        macro_avg,
        weighted_avg,
        per_class: classes,
        confusion_matrix: cm.clone(),
        timing: Timing::default(),
        zero_division,
    })
}

/// One-vs-rest per-class metrics; headline values are support-weighted.
pub fn multiclass_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let mut flag = false;
    let accuracy = ratio(cm.trace(), cm.total(), &mut flag);
    let classes = per_class(cm);
    let (macro_avg, weighted_avg) = averages(&classes, cm.total());
    let mut zero_division = Vec::new();
    if flag {
        zero_division.push("accuracy".to_string());
    }
    for c in &classes {
        zero_division.extend(c.zero_division.iter().map(|m| format!("{}:{m}", c.name)));
    }
    Ok(MetricsReport {
        model: String::new(),
        task: Head::Multiclass,
        accuracy,
        precision: weighted_avg.precision,
        recall: weighted_avg.recall,
        f1: weighted_avg.f1,
        macro_avg,
        weighted_avg,
        per_class: classes,
        confusion_matrix: cm.clone(),
        timing: Timing::default(),
        zero_division,
    })
}

/// Metrics appropriate to the head that produced the predictions.
pub fn evaluate_labels(head: Head, actual: &[u8], predicted: &[u8]) -> Result<MetricsReport> {
    let cm = ConfusionMatrix::from_labels(actual, predicted, head.classes())?;
    match head {
        Head::Binary => binary_metrics(&cm),
        Head::Multiclass => multiclass_metrics(&cm),
    }
}

/// Runs `f` and returns its result with the elapsed wall-clock seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}
