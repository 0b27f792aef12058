//! Confusion-based metrics in percent, with fold summaries and the JSON
//! document written by evaluation.

use serde::{Deserialize, Serialize};

use crate::eeg_io::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub fp: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
        self.fp += other.fp;
    }
}

/// Accuracy, sensitivity, specificity and modified accuracy, in percent.
/// A rate whose denominator is empty is reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub modified_accuracy: f64,
    pub confusion: Confusion,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl Scores {
    pub fn from_confusion(c: Confusion) -> Self {
        let sensitivity = pct(c.tp, c.tp + c.fn_);
        let specificity = pct(c.tn, c.tn + c.fp);
        Scores {
            accuracy: pct(c.tp + c.tn, c.total()),
            sensitivity,
            specificity,
            modified_accuracy: (sensitivity + specificity) / 2.0,
            confusion: c,
        }
    }
}

/// Scores `predictions` against `labels` with `positive` as the detected class.
pub fn evaluate(predictions: &[Label], labels: &[Label], positive: Label) -> Result<Scores> {
    if predictions.len() != labels.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut c = Confusion::default();
    for (&p, &t) in predictions.iter().zip(labels) {
        match (t == positive, p == positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fp += 1,
        }
    }
    Ok(Scores::from_confusion(c))
}

/// Mean and sample standard deviation (`n - 1` divisor; 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Summary { mean: 0.0, sd: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Summary { mean, sd }
    }
}

/// One row of the evaluation table: a model on a feature set, summarized over
/// folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: String,
    pub features: String,
    pub folds: Vec<Scores>,
    pub accuracy: Summary,
    pub sensitivity: Summary,
    pub specificity: Summary,
    pub modified_accuracy: Summary,
    pub pooled: Confusion,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_modified_accuracy: Option<f64>,
}

impl MetricsReport {
    pub fn from_folds(model: impl Into<String>, features: impl Into<String>, folds: Vec<Scores>) -> Self {
        let col = |f: fn(&Scores) -> f64| Summary::of(&folds.iter().map(f).collect::<Vec<_>>());
        let mut pooled = Confusion::default();
        for s in &folds {
            pooled.add(&s.confusion);
        }
        MetricsReport {
            model: model.into(),
            features: features.into(),
            accuracy: col(|s| s.accuracy),
            sensitivity: col(|s| s.sensitivity),
            specificity: col(|s| s.specificity),
            modified_accuracy: col(|s| s.modified_accuracy),
            folds,
            pooled,
            reference_modified_accuracy: None,
        }
    }

    /// `mean(sd)` with two decimals, as in a results table.
    pub fn cell(s: &Summary) -> String {
        format!("{:.2}({:.2})", s.mean, s.sd)
    }
}

pub const METRICS_SCHEMA: &str = "connectome-metrics/1";

/// Top-level evaluation document. Contains no timestamps so identical runs
/// serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub schema: String,
    pub seed: u64,
    pub folds: usize,
    pub positive_class: String,
    pub subjects: usize,
    pub rows: Vec<MetricsReport>,
}

impl MetricsDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MetricsDocument =
            serde_json::from_str(text).map_err(|e| Error::format(format!("metrics JSON: {e}")))?;
        doc.validate()?;
        Ok(doc)
    }

    /// Schema checks beyond field presence.
    pub fn validate(&self) -> Result<()> {
        if self.schema != METRICS_SCHEMA {
            return Err(Error::format(format!("unknown metrics schema '{}'", self.schema)));
        }
        for row in &self.rows {
            if row.folds.len() != self.folds {
                return Err(Error::format(format!(
                    "row {}/{} has {} folds, expected {}",
                    row.model,
                    row.features,
                    row.folds.len(),
                    self.folds
                )));
            }
            for s in &row.folds {
                for v in [s.accuracy, s.sensitivity, s.specificity, s.modified_accuracy] {
                    if !(0.0..=100.0).contains(&v) {
                        return Err(Error::format(format!("metric {v} outside [0, 100]")));
                    }
                }
                if s.modified_accuracy != (s.sensitivity + s.specificity) / 2.0 {
                    return Err(Error::format("modified accuracy is not the sensitivity/specificity mean"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let labels = [0, 1, 0, 1, 1];
        let s = evaluate(&labels, &labels, 0).unwrap();
        assert_eq!((s.accuracy, s.sensitivity, s.specificity, s.modified_accuracy), (100.0, 100.0, 100.0, 100.0));
    }

    #[test]
    fn all_positive_on_unbalanced_cohort() {
        let labels: Vec<Label> = (0..84).map(|i| usize::from(i >= 45)).collect();
        let s = evaluate(&vec![0; 84], &labels, 0).unwrap();
        assert_eq!(s.sensitivity, 100.0);
        assert_eq!(s.specificity, 0.0);
        assert_eq!(s.modified_accuracy, 50.0);
        assert!((s.accuracy - 100.0 * 45.0 / 84.0).abs() < 1e-12);
    }

    #[test]
    fn swapping_positive_swaps_rates() {
        let labels = [0, 0, 0, 1, 1, 1, 1];
        let preds = [0, 1, 1, 1, 1, 0, 1];
        let a = evaluate(&preds, &labels, 0).unwrap();
        let b = evaluate(&preds, &labels, 1).unwrap();
        assert_eq!(a.sensitivity, b.specificity);
        assert_eq!(a.specificity, b.sensitivity);
        assert_eq!(a.accuracy, b.accuracy);
    }

    #[test]
    fn length_mismatch() {
        assert!(evaluate(&[0], &[0, 1], 0).is_err());
    }

    #[test]
    fn sample_sd() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(Summary::of(&[7.0]).sd, 0.0);
    }
}
