//! Wall-clock latency of single-subject classification.

use std::hint::black_box;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::model_file::TrainedModel;

pub const DEFAULT_REPETITIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyRow {
    pub model: String,
    pub features: String,
    pub mean_ms: f64,
    pub repetitions: usize,
}

/// Mean milliseconds per classification of one subject's raw features,
/// including normalization, over `repetitions` runs after one warm-up.
pub fn time_classification(model: &TrainedModel, raw: &[&Tensor], repetitions: usize) -> Result<LatencyRow> {
    if repetitions == 0 {
        return Err(Error::validation("latency timing needs at least one repetition"));
    }
    model.predict_proba(raw)?;
    let start = Instant::now();
    for _ in 0..repetitions {
        black_box(model.predict_proba(black_box(raw))?);
    }
    let mean_ms = start.elapsed().as_secs_f64() * 1e3 / repetitions as f64;
    Ok(LatencyRow {
        model: model.kind.name().to_string(),
        features: model.kind.feature_label(),
        mean_ms: mean_ms.max(f64::MIN_POSITIVE),
        repetitions,
    })
}

/// Plain-text latency table, one row per model.
pub fn latency_table(rows: &[LatencyRow]) -> String {
    let mut out = format!("{:<18} {:<12} {:>12} {:>8}\n", "model", "features", "mean_ms", "reps");
    for r in rows {
        out.push_str(&format!("{:<18} {:<12} {:>12.4} {:>8}\n", r.model, r.features, r.mean_ms, r.repetitions));
    }
    out
}
