use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts with `true` (use event) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(preds: &[bool], labels: &[bool]) -> Result<Self> {
        if preds.len() != labels.len() {
            return Err(Error::ShapeMismatch { expected: labels.len(), actual: preds.len() });
        }
        let mut c = ConfusionCounts::default();
        for (&p, &l) in preds.iter().zip(labels) {
            match (p, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    /// Precision was undefined (no positive predictions) and reported as 0.
    pub no_positive_predictions: bool,
    /// The evaluated labels contain only one class.
    pub single_class_test: bool,
}

impl MetricFlags {
    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.no_positive_predictions {
            parts.push("no_positive_predictions");
        }
        if self.single_class_test {
            parts.push("single_class_test");
        }
        parts.join("|")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
    pub flags: MetricFlags,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic-mean F1; 0 when precision and recall are both 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

pub fn metrics_from_counts(c: ConfusionCounts) -> MetricsReport {
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    MetricsReport {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1: f1_score(precision, recall),
        counts: c,
        flags: MetricFlags {
            no_positive_predictions: c.tp + c.fp == 0,
            single_class_test: c.tp + c.fn_ == 0 || c.tn + c.fp == 0,
        },
    }
}

pub fn compute_metrics(preds: &[bool], labels: &[bool]) -> Result<MetricsReport> {
    if labels.is_empty() {
        return Err(Error::EmptyBatch);
    }
    Ok(metrics_from_counts(ConfusionCounts::from_predictions(preds, labels)?))
}

/// Unweighted mean of the four metrics over folds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MeanMetrics {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a MetricsReport>) -> Self {
        let mut m = MeanMetrics::default();
        let mut n = 0usize;
        for r in reports {
            m.accuracy += r.accuracy;
            m.precision += r.precision;
            m.recall += r.recall;
            m.f1 += r.f1;
            n += 1;
        }
        if n > 0 {
            let inv = 1.0 / n as f64;
            m.accuracy *= inv;
            m.precision *= inv;
            m.recall *= inv;
            m.f1 *= inv;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> (Vec<bool>, Vec<bool>) {
        let mut p = Vec::new();
        let mut l = Vec::new();
        for (n, pv, lv) in [(tp, true, true), (fp, true, false), (fn_, false, true), (tn, false, false)] {
            p.extend(std::iter::repeat_n(pv, n));
            l.extend(std::iter::repeat_n(lv, n));
        }
        (p, l)
    }

    #[test]
    fn hand_computed_metrics() {
        let (p, l) = from_counts(3, 1, 2, 4);
        let m = compute_metrics(&p, &l).unwrap();
        assert!((m.accuracy - 0.7).abs() < 1e-15);
        assert!((m.precision - 0.75).abs() < 1e-15);
        assert!((m.recall - 0.6).abs() < 1e-15);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.flags, MetricFlags::default());
    }

    #[test]
    fn perfect_predictions() {
        let l = vec![true, false, true, true, false];
        let m = compute_metrics(&l, &l).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn no_positive_predictions_is_flagged() {
        let (p, l) = from_counts(0, 0, 3, 5);
        let m = compute_metrics(&p, &l).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.flags.no_positive_predictions);
        assert!(!m.flags.single_class_test);
        assert_eq!(m.flags.describe(), "no_positive_predictions");
    }

    #[test]
    fn length_mismatch_errors() {
        assert!(compute_metrics(&[true], &[true, false]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }
}
