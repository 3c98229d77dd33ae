//! Evaluation metrics for binary predictions: accuracy ("score"), RMSE,
//! relative absolute error, relative squared error, and the coefficient of
//! determination, plus confusion counts.
//!
//! All metrics are computed on hard 0/1 labels. With binary labels the error
//! terms are 0 or 1, so rmse^2 = 1 - accuracy holds exactly and r2 is defined
//! as 1 - rse.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Metrics for one model on one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    /// Fraction of correct predictions.
    pub accuracy: f64,
    pub rmse: f64,
    pub rae: f64,
    pub rse: f64,
    pub r2: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

/// Score predictions against ground truth. Truth must contain both classes,
/// otherwise the relative-error denominators vanish.
pub fn evaluate(predictions: &[u8], truth: &[u8]) -> Result<EvalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions vs {} truth labels",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Dataset("cannot evaluate zero predictions".into()));
    }
    for (i, v) in predictions.iter().chain(truth.iter()).enumerate() {
        if *v > 1 {
            return Err(Error::Dataset(format!(
                "labels must be 0 or 1, found {v} at position {i}"
            )));
        }
    }
    let n = truth.len();
    let positives = truth.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::Dataset(
            "truth contains a single class; relative errors are undefined".into(),
        ));
    }

    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut tn = 0usize;
    let mut fn_ = 0usize;
    for (&p, &y) in predictions.iter().zip(truth) {
        match (p, y) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            _ => fn_ += 1,
        }
    }
    let wrong = (fp + fn_) as f64;
    let n_f = n as f64;
    let accuracy = (tp + tn) as f64 / n_f;
    // With 0/1 labels, both the absolute and the squared error sums equal the
    // number of wrong predictions.
    let rmse = (wrong / n_f).sqrt();
    let mean_truth = positives as f64 / n_f;
    let sum_abs_dev: f64 = truth.iter().map(|&y| (y as f64 - mean_truth).abs()).sum();
    let sum_sq_dev: f64 = truth
        .iter()
        .map(|&y| {
            let d = y as f64 - mean_truth;
            d * d
        })
        .sum();
    let rae = wrong / sum_abs_dev;
    let rse = wrong / sum_sq_dev;
    Ok(EvalReport {
        n,
        accuracy,
        rmse,
        rae,
        rse,
        r2: 1.0 - rse,
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
    })
}

/// Display names for the five metrics, in table order.
pub const METRIC_NAMES: [&str; 5] = [
    "Score",
    "Root Mean Squared Error (RMSE)",
    "Relative Absolute Error (RAE)",
    "Relative Squared Error (RSE)",
    "Coefficient of Determination",
];

fn metric_values(report: &EvalReport) -> [f64; 5] {
    [report.accuracy, report.rmse, report.rae, report.rse, report.r2]
}

/// Side-by-side metric table: one column per model, one row per metric.
/// JSON keeps full-precision floats; markdown renders at 2 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub columns: Vec<String>,
    pub rows: Vec<ComparisonRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: String,
    pub values: Vec<f64>,
}

/// Build the comparison table from named reports, preserving column order.
pub fn comparison_table(reports: &[(String, EvalReport)]) -> Result<ComparisonTable> {
    if reports.is_empty() {
        return Err(Error::Dataset("comparison table needs at least one report".into()));
    }
    let columns: Vec<String> = reports.iter().map(|(name, _)| name.clone()).collect();
    let rows = METRIC_NAMES
        .iter()
        .enumerate()
        .map(|(mi, name)| ComparisonRow {
            metric: name.to_string(),
            values: reports.iter().map(|(_, r)| metric_values(r)[mi]).collect(),
        })
        .collect();
    Ok(ComparisonTable { columns, rows })
}

impl ComparisonTable {
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Metric |");
        for c in &self.columns {
            out.push_str(&format!(" {c} |"));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.columns {
            out.push_str("---|");
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("| {} |", row.metric));
            for v in &row.values {
                out.push_str(&format!(" {v:.2} |"));
            }
            out.push('\n');
        }
        out
    }
}
