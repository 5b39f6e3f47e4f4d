use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, MetricsReport};
use crate::model::Head;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::InvalidConfig(format!(
                "unknown report format `{other}` (expected text or json)"
            ))),
        }
    }
}

/// Renders one or more reports. Text output has one comparison table per
/// task followed by per-class metrics and confusion matrices; JSON output is
/// an array of reports.
pub fn render_report(reports: &[MetricsReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Empty("report list"));
    }
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(reports)? + "\n"),
        ReportFormat::Text => Ok(render_text(reports)),
    }
}

fn pct(v: f64) -> String {
    format!("{:.2}%", v * 100.0)
}

fn secs(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |s| format!("{s:.2}"))
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| -> String {
        let parts: Vec<String> = cells
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    out.push_str(&line(&mut header.iter().copied()));
    out.push('\n');
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
        out.push('\n');
    }
}

fn render_text(reports: &[MetricsReport]) -> String {
    let mut out = String::new();
    for head in [Head::Binary, Head::Multiclass] {
        let group: Vec<&MetricsReport> = reports.iter().filter(|r| r.task == head).collect();
        if group.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "{} classification",
            if head == Head::Binary {
                "Binary"
            } else {
                "Multiclass"
            }
        );
        let name = |r: &MetricsReport| {
            if r.model.is_empty() {
                "model".to_string()
            } else {
                r.model.clone()
            }
        };
        match head {
            Head::Binary => {
                let rows: Vec<Vec<String>> = group
                    .iter()
                    .map(|r| {
                        vec![
                            name(r),
                            pct(r.accuracy),
                            pct(r.recall),
                            pct(r.precision),
                            pct(r.f1),
                            secs(r.timing.train_s),
                            secs(r.timing.predict_s),
                            secs(r.timing.total_s()),
                        ]
                    })
                    .collect();
                table(
                    &mut out,
                    &[
                        "Model",
                        "Accuracy",
                        "Recall",
                        "Precision",
                        "F1-Score",
                        "Train (s)",
                        "Predict (s)",
                        "Total (s)",
                    ],
                    &rows,
                );
            }
            Head::Multiclass => {
                let rows: Vec<Vec<String>> = group
                    .iter()
                    .map(|r| {
                        vec![
                            name(r),
                            pct(r.accuracy),
                            pct(r.precision),
                            pct(r.recall),
                            pct(r.f1),
                            secs(r.timing.train_s),
                            secs(r.timing.predict_s),
                        ]
                    })
                    .collect();
                table(
                    &mut out,
                    &[
                        "Model",
                        "Accuracy",
                        "Precision",
                        "Recall",
                        "F1-Score",
                        "Train (s)",
                        "Predict (s)",
                    ],
                    &rows,
                );
            }
        }
        for r in group {
            let _ = writeln!(out, "\n{} per class", name(r));
            let rows: Vec<Vec<String>> = r
                .per_class
                .iter()
                .map(|c| {
                    let mut name = c.name.clone();
                    if !c.zero_division.is_empty() {
                        name.push('*');
                    }
                    vec![
                        name,
                        pct(c.precision),
                        pct(c.recall),
                        pct(c.f1),
                        c.support.to_string(),
                    ]
                })
                .collect();
            table(
                &mut out,
                &["Class", "Precision", "Recall", "F1-Score", "Support"],
                &rows,
            );
            let _ = writeln!(
                out,
                "macro avg: precision {} recall {} f1 {}",
                pct(r.macro_avg.precision),
                pct(r.macro_avg.recall),
                pct(r.macro_avg.f1)
            );
            let _ = writeln!(
                out,
                "weighted avg: precision {} recall {} f1 {}",
                pct(r.weighted_avg.precision),
                pct(r.weighted_avg.recall),
                pct(r.weighted_avg.f1)
            );
            if !r.zero_division.is_empty() {
                let _ = writeln!(
                    out,
                    "* zero denominator, reported as 0: {}",
                    r.zero_division.join(", ")
                );
            }
            let _ = writeln!(
                out,
                "\n{} confusion matrix (rows actual, columns predicted)",
                name(r)
            );
            render_confusion(&mut out, &r.confusion_matrix);
        }
    }
    out
}

fn render_confusion(out: &mut String, cm: &ConfusionMatrix) {
    let mut header = vec![""];
    header.extend(cm.class_names.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = cm
        .counts
        .iter()
        .zip(&cm.class_names)
        .map(|(row, name)| {
            std::iter::once(name.clone())
                .chain(row.iter().map(u64::to_string))
                .collect()
        })
        .collect();
    table(out, &header, &rows);
}
