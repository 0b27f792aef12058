use anyhow::{bail, Result};
use connectome::config::RunConfig;
use connectome::pipeline::model_file::{ModelBody, TrainedModel};
use connectome::pipeline::{cross_validate, predictions, MetricsReport, ModelKind};

use crate::artifacts::{self, model_file_name};

/// Per-domain networks of a fusion model as stand-alone single-CNN models.
fn domain_models(model: &TrainedModel) -> Vec<TrainedModel> {
    let nets = match &model.body {
        ModelBody::ScoreFusion { domains, .. } | ModelBody::DecisionFusion { domains } => domains,
        _ => return Vec::new(),
    };
    model
        .kind
        .domains()
        .iter()
        .zip(nets)
        .zip(&model.normalizers)
        .map(|((&d, net), norm)| TrainedModel {
            kind: ModelKind::cnn_for(d),
            classes: model.classes.clone(),
            bands: model.bands.clone(),
            normalizers: vec![norm.clone()],
            body: ModelBody::Network(net.clone()),
        })
        .collect()
}

pub fn print_table(rows: &[MetricsReport]) {
    println!(
        "{:<16} {:<12} {:>14} {:>14} {:>14} {:>14}",
        "model", "features", "accuracy", "sensitivity", "specificity", "modified_acc"
    );
    for r in rows {
        println!(
            "{:<16} {:<12} {:>14} {:>14} {:>14} {:>14}",
            r.model,
            r.features,
            MetricsReport::cell(&r.accuracy),
            MetricsReport::cell(&r.sensitivity),
            MetricsReport::cell(&r.specificity),
            MetricsReport::cell(&r.modified_accuracy)
        );
    }
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let subjects = artifacts::load_features(cfg)?;
    let settings = cfg.cv_settings()?;
    log::info!(
        "training {} model kinds on {} subjects, {} folds, {} epochs",
        cfg.models.len(),
        subjects.len(),
        cfg.folds,
        cfg.epochs
    );
    let outcome = cross_validate(&subjects, &cfg.models, &settings)?;

    let (models_dir, curves_dir) = (artifacts::models_dir(cfg), artifacts::curves_dir(cfg));
    artifacts::create_dir(&models_dir)?;
    artifacts::create_dir(&curves_dir)?;
    artifacts::write(&cfg.output_dir.join("folds.csv"), outcome.plan.to_csv())?;
    for fold in &outcome.folds {
        for m in &fold.models {
            let Some(model) = &m.model else { continue };
            artifacts::write(&models_dir.join(model_file_name(m.kind.name(), fold.fold)), model.to_bytes())?;
            for (d, sub) in m.kind.domains().iter().zip(domain_models(model)) {
                let name = format!("{}.{}", m.kind.name(), d.file_tag());
                artifacts::write(&models_dir.join(model_file_name(&name, fold.fold)), sub.to_bytes())?;
            }
        }
        for (name, curve) in &fold.curves {
            artifacts::write(&curves_dir.join(format!("{name}.fold{}.csv", fold.fold)), curve.to_csv())?;
        }
    }
    let records = predictions::records_from_outcome(&outcome);
    artifacts::write(&artifacts::predictions_path(cfg), predictions::to_csv(&records, &cfg.classes))?;

    print_table(&outcome.reports);
    println!("models, curves and predictions written to {}", cfg.output_dir.display());
    if !outcome.failures.is_empty() {
        for (f, msg) in &outcome.failures {
            println!("fold {f} failed: {msg}");
        }
        bail!("{} of {} folds failed", outcome.failures.len(), cfg.folds);
    }
    Ok(())
}
