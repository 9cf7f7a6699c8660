use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    /// Indexed by class label.
    pub classes: [ClassMetrics; 2],
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; 2]; 2],
    pub total: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn classification_report(predictions: &[u8], labels: &[u8]) -> Result<ClassificationReport> {
    if predictions.len() != labels.len() {
        return domain(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        ));
    }
    if labels.is_empty() {
        return domain("classification report of an empty set");
    }
    let mut confusion = [[0usize; 2]; 2];
    for (&p, &y) in predictions.iter().zip(labels) {
        if p > 1 || y > 1 {
            return domain("labels and predictions must be 0 or 1");
        }
        confusion[y as usize][p as usize] += 1;
    }
    Ok(ClassificationReport::from_confusion(confusion))
}

impl ClassificationReport {
    pub fn from_confusion(confusion: [[usize; 2]; 2]) -> Self {
        let mut classes = [ClassMetrics::default(); 2];
        for c in 0..2 {
            let tp = confusion[c][c];
            let predicted = confusion[0][c] + confusion[1][c];
            let support = confusion[c][0] + confusion[c][1];
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            classes[c] = ClassMetrics {
                precision,
                recall,
                f1,
                support,
            };
        }
        let total = confusion.iter().flatten().sum();
        ClassificationReport {
            classes,
            accuracy: ratio(confusion[0][0] + confusion[1][1], total),
            confusion,
            total,
        }
    }

    /// Aligned table: one header line and one line per labelled report.
    pub fn to_text(reports: &[(&str, &ClassificationReport)]) -> String {
        let cols = [
            "precision(0)",
            "recall(0)",
            "f1-score(0)",
            "support(0)",
            "precision(1)",
            "recall(1)",
            "f1-score(1)",
            "support(1)",
        ];
        let lw = reports.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(5);
        let mut out = format!("{:<lw$}", "");
        for c in cols {
            let _ = write!(out, " {c:>12}");
        }
        out.push('\n');
        for (label, r) in reports {
            let _ = write!(out, "{label:<lw$}");
            for m in &r.classes {
                let _ = write!(out, " {:>12.2} {:>12.2} {:>12.2} {:>12}", m.precision, m.recall, m.f1, m.support);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaRule {
    /// 1 when class 1 has the larger f1; ties go to 0.
    #[default]
    F1Comparison,
    /// The class predicted most often; ties go to 0.
    MajorityPredicted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub theta: u8,
    pub rule: ThetaRule,
    pub f1: [f64; 2],
    pub predicted: [usize; 2],
}

pub fn estimate_theta(report: &ClassificationReport, rule: ThetaRule) -> ThetaEstimate {
    let f1 = [report.classes[0].f1, report.classes[1].f1];
    let c = &report.confusion;
    let predicted = [c[0][0] + c[1][0], c[0][1] + c[1][1]];
    let theta = match rule {
        ThetaRule::F1Comparison => (f1[1] > f1[0]) as u8,
        ThetaRule::MajorityPredicted => (predicted[1] > predicted[0]) as u8,
    };
    ThetaEstimate {
        theta,
        rule,
        f1,
        predicted,
    }
}
