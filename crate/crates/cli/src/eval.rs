use std::collections::BTreeSet;
use std::fs;

use anyhow::{Context, Result};
use connectome::config::RunConfig;
use connectome::pipeline::metrics::METRICS_SCHEMA;
use connectome::pipeline::{predictions, MetricsDocument, ModelKind};

use crate::artifacts;
use crate::train::print_table;

/// Published modified accuracy of decision-level fusion on the 84-subject
/// cohort, shown next to ours for comparison only.
const DECISION_FUSION_REFERENCE: f64 = 93.06;

pub fn build_document(cfg: &RunConfig) -> Result<MetricsDocument> {
    let path = artifacts::predictions_path(cfg);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {} (run `train` first)", path.display()))?;
    let records = predictions::from_csv(&text, &cfg.classes)?;
    let mut rows = predictions::reports_from_records(&records, &cfg.models, cfg.folds)?;
    for row in &mut rows {
        if row.model == ModelKind::FusionDecision.name() {
            row.reference_modified_accuracy = Some(DECISION_FUSION_REFERENCE);
        }
    }
    let subjects: BTreeSet<&str> = records.iter().map(|r| r.subject_id.as_str()).collect();
    let doc = MetricsDocument {
        schema: METRICS_SCHEMA.to_string(),
        seed: cfg.seed,
        folds: cfg.folds,
        positive_class: cfg.classes.name(0).to_string(),
        subjects: subjects.len(),
        rows,
    };
    doc.validate()?;
    Ok(doc)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let doc = build_document(cfg)?;
    let out = cfg.output_dir.join("metrics.json");
    artifacts::write(&out, doc.to_json())?;
    print_table(&doc.rows);
    if let Some(row) = doc.rows.iter().find(|r| r.reference_modified_accuracy.is_some()) {
        println!(
            "{} modified accuracy {:.2} (published reference {:.2}, informational)",
            row.model,
            row.modified_accuracy.mean,
            DECISION_FUSION_REFERENCE
        );
    }
    println!("metrics written to {}", out.display());
    Ok(())
}
