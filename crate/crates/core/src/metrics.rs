//! Positive-class precision, recall, and F1, with INFORMATIVE as the
//! positive class. Undefined ratios (zero denominators) evaluate to 0 rather
//! than erroring, so degenerate epochs still score.

use serde::Serialize;

use crate::corpus::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvaluationReport {
    /// `P=<p> R=<r> F1=<f>` with 4 decimal places.
    pub fn render(&self) -> String {
        format!(
            "P={:.4} R={:.4} F1={:.4}",
            self.precision, self.recall, self.f1
        )
    }

    /// Machine-readable variant of [`EvaluationReport::render`].
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

/// Scores predictions against gold labels.
pub fn evaluate(gold: &[Label], pred: &[Label]) -> Result<EvaluationReport> {
    if gold.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot evaluate zero label pairs".into(),
        ));
    }
    if gold.len() != pred.len() {
        return Err(Error::InvalidArgument(format!(
            "gold and prediction lengths differ: {} vs {}",
            gold.len(),
            pred.len()
        )));
    }

    let mut report = EvaluationReport {
        true_pos: 0,
        false_pos: 0,
        false_neg: 0,
        true_neg: 0,
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
    for (g, p) in gold.iter().zip(pred) {
        match (g, p) {
            (Label::Informative, Label::Informative) => report.true_pos += 1,
            (Label::Uninformative, Label::Informative) => report.false_pos += 1,
            (Label::Informative, Label::Uninformative) => report.false_neg += 1,
            (Label::Uninformative, Label::Uninformative) => report.true_neg += 1,
        }
    }

    report.precision = ratio(report.true_pos, report.true_pos + report.false_pos);
    report.recall = ratio(report.true_pos, report.true_pos + report.false_neg);
    report.f1 = if report.precision + report.recall > 0.0 {
        2.0 * report.precision * report.recall / (report.precision + report.recall)
    } else {
        0.0
    };
    Ok(report)
}

fn ratio(numerator: usize, denominator: usize) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}
