//! Out-of-fold predictions as CSV, and metrics recomputed from them.

use crate::eeg_io::{ClassNames, Label};
use crate::error::{Error, Result};

use super::cv::CvOutcome;
use super::metrics::{evaluate, MetricsReport};
use super::spec::ModelKind;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub fold: usize,
    pub model: ModelKind,
    pub subject_id: String,
    pub label: Label,
    pub prediction: Label,
    pub probabilities: [f64; 2],
}

pub fn records_from_outcome(outcome: &CvOutcome) -> Vec<PredictionRecord> {
    let mut out = Vec::new();
    for f in &outcome.folds {
        for m in &f.models {
            for i in 0..m.test_ids.len() {
                out.push(PredictionRecord {
                    fold: f.fold,
                    model: m.kind,
                    subject_id: m.test_ids[i].clone(),
                    label: m.test_labels[i],
                    prediction: m.predictions[i],
                    probabilities: [m.probabilities[i][0], m.probabilities[i][1]],
                });
            }
        }
    }
    out
}

/// `fold,model,subject_id,label,prediction,p_<class0>,p_<class1>`; labels are
/// written as class names.
pub fn to_csv(records: &[PredictionRecord], classes: &ClassNames) -> String {
    let mut out = format!(
        "fold,model,subject_id,label,prediction,p_{},p_{}\n",
        classes.name(0),
        classes.name(1)
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.fold,
            r.model,
            r.subject_id,
            classes.name(r.label),
            classes.name(r.prediction),
            r.probabilities[0],
            r.probabilities[1]
        ));
    }
    out
}

pub fn from_csv(text: &str, classes: &ClassNames) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let line_no = i + 1;
        let bad = |m: String| Error::Parse { line: line_no, message: m };
        let cols: Vec<&str> = line.split(',').collect();
        let [fold, model, id, label, pred, p0, p1] = cols[..] else {
            return Err(bad(format!("expected 7 columns, got {}", cols.len())));
        };
        let class = |s: &str| classes.index_of(s).ok_or_else(|| bad(format!("unknown class '{s}'")));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad probability '{s}'")));
        out.push(PredictionRecord {
            fold: fold.parse().map_err(|_| bad(format!("bad fold '{fold}'")))?,
            model: model.parse().map_err(|e: Error| bad(e.to_string()))?,
            subject_id: id.to_string(),
            label: class(label)?,
            prediction: class(pred)?,
            probabilities: [num(p0)?, num(p1)?],
        });
    }
    Ok(out)
}

/// One report per model in `kinds`, scoring each of `folds` folds separately.
pub fn reports_from_records(records: &[PredictionRecord], kinds: &[ModelKind], folds: usize) -> Result<Vec<MetricsReport>> {
    kinds
        .iter()
        .map(|&kind| {
            let scores = (0..folds)
                .map(|f| {
                    let rows: Vec<&PredictionRecord> =
                        records.iter().filter(|r| r.model == kind && r.fold == f).collect();
                    if rows.is_empty() {
                        return Err(Error::validation(format!("no predictions for {kind} in fold {f}")));
                    }
                    let preds: Vec<Label> = rows.iter().map(|r| r.prediction).collect();
                    let labels: Vec<Label> = rows.iter().map(|r| r.label).collect();
                    evaluate(&preds, &labels, 0)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MetricsReport::from_folds(kind.name(), kind.feature_label(), scores))
        })
        .collect()
}
