//! Confusion-matrix metrics and rank-based AUROC. Chemotherapy is the
//! positive class.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Treatment;
use crate::stats::midranks;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no rows to score")]
    Empty,
    #[error("AUROC needs both classes")]
    SingleClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub r#fn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.r#fn
    }
}

pub fn confusion(labels: &[Treatment], predicted: &[Treatment]) -> Result<ConfusionMatrix, EvalError> {
    if labels.len() != predicted.len() {
        return Err(EvalError::LengthMismatch(labels.len(), predicted.len()));
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&y, &p) in labels.iter().zip(predicted) {
        match (y.is_positive(), p.is_positive()) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.r#fn += 1,
        }
    }
    Ok(cm)
}

/// Performance measures, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Auroc,
    Precision,
    Sensitivity,
    Specificity,
    #[serde(rename = "f1_score")]
    F1Score,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Accuracy,
        Metric::Auroc,
        Metric::Precision,
        Metric::Sensitivity,
        Metric::Specificity,
        Metric::F1Score,
    ];

    /// Serialized name.
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Auroc => "auroc",
            Metric::Precision => "precision",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
            Metric::F1Score => "f1_score",
        }
    }

    /// Display name used in summary tables.
    pub fn title(self) -> &'static str {
        match self {
            Metric::Accuracy => "Accuracy",
            Metric::Auroc => "Auroc",
            Metric::Precision => "Precision",
            Metric::Sensitivity => "Sensitivity",
            Metric::Specificity => "Specificity",
            Metric::F1Score => "F1 Score",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Metric::ALL.into_iter().find(|m| m.as_str() == s || m.title() == s)
    }
}

/// One scoring's six metrics. `None` marks an undefined ratio (zero
/// denominator), which is never silently replaced by zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub accuracy: Option<f64>,
    pub auroc: Option<f64>,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1_score: Option<f64>,
}

impl MetricVector {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Accuracy => self.accuracy,
            Metric::Auroc => self.auroc,
            Metric::Precision => self.precision,
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
            Metric::F1Score => self.f1_score,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(cm: &ConfusionMatrix, scores: &[f64], labels: &[Treatment]) -> Result<MetricVector, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    if cm.total() != labels.len() as u64 {
        return Err(EvalError::LengthMismatch(cm.total() as usize, labels.len()));
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let sensitivity = ratio(cm.tp, cm.tp + cm.r#fn);
    let f1_score = match (precision, sensitivity) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        _ => None,
    };
    let auroc = match auroc(scores, labels) {
        Ok(a) => Some(a),
        Err(EvalError::SingleClass) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricVector {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        auroc,
        precision,
        sensitivity,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        f1_score,
    })
}

/// Probability that a random positive outscores a random negative, ties
/// counted one half, from midranks in O(n log n).
pub fn auroc(scores: &[f64], labels: &[Treatment]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let (ranks, _) = midranks(scores);
    // twice the positive rank sum is an exact integer
    let twice_rank_sum: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, l)| l.is_positive())
        .map(|(r, _)| 2.0 * r)
        .sum();
    let np = n_pos as f64;
    let twice_u = twice_rank_sum - np * (np + 1.0);
    Ok(twice_u / (2.0 * np * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Treatment::{Chemotherapy as C, HormoneTherapy as H};

    #[test]
    fn confusion_counts() {
        let cm = confusion(&[C, C, H], &[C, H, H]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, fp: 0, tn: 1, r#fn: 1 });
        let labels = [C, H, C, H];
        let all_right = confusion(&labels, &labels).unwrap();
        assert_eq!((all_right.fp, all_right.r#fn), (0, 0));
        let flipped: Vec<Treatment> = labels.iter().map(|t| t.flipped()).collect();
        let wrong = confusion(&labels, &flipped).unwrap();
        assert_eq!((wrong.tp, wrong.tn), (0, 0));
        assert_eq!(confusion(&[C], &[]), Err(EvalError::LengthMismatch(1, 0)));
    }

    #[test]
    fn perfect_classifier_scores_one() {
        let labels = [C, C, H, H];
        let scores = [0.9, 0.8, 0.2, 0.1];
        let cm = confusion(&labels, &labels).unwrap();
        let m = compute_metrics(&cm, &scores, &labels).unwrap();
        for metric in Metric::ALL {
            assert_eq!(m.get(metric), Some(1.0), "{metric:?}");
        }
    }

    #[test]
    fn undefined_ratios_are_absent() {
        let labels = [C, C, H];
        let predicted = [H, H, H];
        let cm = confusion(&labels, &predicted).unwrap();
        let m = compute_metrics(&cm, &[0.1, 0.2, 0.3], &labels).unwrap();
        assert_eq!(m.precision, None);
        assert_eq!(m.f1_score, None);
        assert_eq!(m.sensitivity, Some(0.0));
    }

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.1, 0.4, 0.35, 0.8], &[H, H, C, C]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.5; 4], &[H, H, C, C]).unwrap(), 0.5);
        assert_eq!(auroc(&[0.9, 0.8, 0.1], &[C, C, H]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.9, 0.8], &[C, C]), Err(EvalError::SingleClass));
    }

    #[test]
    fn metric_names() {
        let names: Vec<&str> = Metric::ALL.iter().map(|m| m.as_str()).collect();
        assert_eq!(names, ["accuracy", "auroc", "precision", "sensitivity", "specificity", "f1_score"]);
        assert_eq!(serde_json::to_string(&Metric::F1Score).unwrap(), "\"f1_score\"");
    }
}
