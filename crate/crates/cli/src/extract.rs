use anyhow::{bail, Context, Result};
use connectome::config::RunConfig;
use connectome::container::write_subject;
use connectome::eeg_io::{load_manifest, load_recording, ManifestEntry};
use connectome::features::extract;
use connectome::var_model::bic_order_select;
use connectome::SubjectFeatures;
use rayon::prelude::*;

use crate::artifacts;

fn extract_one(cfg: &RunConfig, entry: &ManifestEntry) -> Result<SubjectFeatures> {
    let mut rec = load_recording(&entry.path, cfg.format, cfg.channels, cfg.rate)
        .with_context(|| format!("loading {}", entry.path.display()))?;
    rec.subject_id = entry.subject_id.clone();
    rec.label = Some(entry.label);
    if cfg.max_order > 0 {
        let sel = bic_order_select(&rec, cfg.max_order)?;
        log::info!(
            "{}: BIC selects order {} of 1..={} (flagged {:?}); features use order {}",
            rec.subject_id,
            sel.order,
            cfg.max_order,
            sel.flagged,
            cfg.order
        );
    }
    Ok(extract(&rec, &cfg.extraction())?)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let manifest = load_manifest(cfg.manifest_path()?, &cfg.classes)?;
    artifacts::create_dir(&cfg.features_dir)?;
    let results: Vec<Result<SubjectFeatures>> = manifest.entries.par_iter().map(|e| extract_one(cfg, e)).collect();
    let mut index = Vec::new();
    let mut failed = 0;
    for (entry, result) in manifest.entries.iter().zip(results) {
        let label = cfg.classes.name(entry.label);
        match result.and_then(|f| {
            write_subject(&cfg.features_dir, &f)?;
            Ok(f)
        }) {
            Ok(f) => {
                println!(
                    "{}\t{label}\tok\tVAR {}\tPDC {}\tCN {}",
                    f.subject_id,
                    f.var.shape_string(),
                    f.pdc.values.shape_string(),
                    f.cn.values.shape_string()
                );
                index.push((f.subject_id, f.label));
            }
            Err(e) => {
                failed += 1;
                log::error!("{}: {e:#}", entry.subject_id);
                println!("{}\t{label}\tfailed\t{e:#}", entry.subject_id);
            }
        }
    }
    artifacts::write_index(&artifacts::index_path(cfg), &index, &cfg.classes)?;
    println!("extracted {} of {} subjects into {}", index.len(), manifest.len(), cfg.features_dir.display());
    if failed > 0 {
        bail!("{failed} of {} subjects failed", manifest.len());
    }
    Ok(())
}
