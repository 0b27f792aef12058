use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use connectome::config::RunConfig;
use connectome::container::read_subject;
use connectome::features::Domain;
use connectome::pipeline::timing::{latency_table, time_classification};
use connectome::pipeline::train::LearningCurve;
use connectome::pipeline::{ModelKind, TrainedModel};
use connectome::report::{ascii_heatmap, conv_feature_maps, learning_curve_svg, pgm};
use connectome::Tensor;

use crate::artifacts::{self, model_file_name};

fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    TrainedModel::from_bytes(&bytes).with_context(|| format!("decoding {}", path.display()))
}

fn curves(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let dir = artifacts::curves_dir(cfg);
    let mut entries: Vec<_> = fs::read_dir(&dir)
        .with_context(|| format!("listing {} (run `train` first)", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    entries.sort();
    for p in &entries {
        let curve = LearningCurve::from_csv(&fs::read_to_string(p)?)
            .with_context(|| format!("parsing {}", p.display()))?;
        let stem = p.file_stem().unwrap_or_default().to_string_lossy().to_string();
        artifacts::write(&out.join(format!("{stem}.svg")), learning_curve_svg(&curve, &stem))?;
    }
    Ok(entries.len())
}

/// Fold-0 single-domain network for `d`: the stand-alone CNN if trained,
/// otherwise the copy saved with a fusion model.
fn domain_model(cfg: &RunConfig, d: Domain) -> Option<TrainedModel> {
    let dir = artifacts::models_dir(cfg);
    let mut names = vec![ModelKind::cnn_for(d).name().to_string()];
    for fusion in [ModelKind::FusionDecision, ModelKind::FusionScore] {
        names.push(format!("{}.{}", fusion.name(), d.file_tag()));
    }
    names
        .iter()
        .map(|n| dir.join(model_file_name(n, 0)))
        .find(|p| p.exists())
        .and_then(|p| load_model(&p).ok())
}

fn feature_maps(cfg: &RunConfig, subjects: &[String], out: &Path) -> Result<usize> {
    let mut written = 0;
    for d in [Domain::Var, Domain::Pdc] {
        let Some(model) = domain_model(cfg, d) else {
            log::warn!("no trained {} network; skipping its feature maps", d.name());
            continue;
        };
        let net = model.domain_network(d).expect("single-domain model has a network");
        for id in subjects {
            let f = read_subject(&cfg.features_dir, id)?;
            let x = model.prepare(&[f.domain(d)])?.remove(0);
            for layer in 0..2 {
                let maps = conv_feature_maps(net, &x, layer)?;
                let dir = out.join(id).join(format!("{}_conv{}", ModelKind::cnn_for(d), layer + 1));
                artifacts::create_dir(&dir)?;
                for (i, m) in maps.iter().enumerate() {
                    artifacts::write(&dir.join(format!("map{i:03}.pgm")), pgm(&m.values, m.height, m.width)?)?;
                    if cfg.ascii_heatmaps {
                        artifacts::write(&dir.join(format!("map{i:03}.txt")), ascii_heatmap(&m.values, m.height, m.width)?)?;
                    }
                }
                println!("{id}: {} layer {} -> {} maps of {}x{}", ModelKind::cnn_for(d), layer + 1, maps.len(), maps[0].height, maps[0].width);
                written += maps.len();
            }
        }
    }
    Ok(written)
}

fn latency(cfg: &RunConfig, subject: &str, out: &Path) -> Result<()> {
    let f = read_subject(&cfg.features_dir, subject)?;
    let mut rows = Vec::new();
    for kind in &cfg.models {
        let path = artifacts::models_dir(cfg).join(model_file_name(kind.name(), 0));
        if !path.exists() {
            log::warn!("{} missing; not timed", path.display());
            continue;
        }
        let model = load_model(&path)?;
        let raw: Vec<&Tensor> = kind.domains().iter().map(|&d| f.domain(d)).collect();
        rows.push(time_classification(&model, &raw, cfg.latency_repetitions)?);
    }
    let table = latency_table(&rows);
    let mut csv = String::from("model,features,mean_ms,repetitions\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.model, r.features, r.mean_ms, r.repetitions));
    }
    artifacts::write(&out.join("latency.txt"), &table)?;
    artifacts::write(&out.join("latency.csv"), csv)?;
    print!("{table}");
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let out = artifacts::figures_dir(cfg);
    let curves_out = out.join("curves");
    artifacts::create_dir(&curves_out)?;
    let n = curves(cfg, &curves_out)?;
    println!("{n} learning curves -> {}", curves_out.display());

    let index = artifacts::read_index(cfg)?;
    let subjects = if cfg.report_subjects.is_empty() { vec![index[0].clone()] } else { cfg.report_subjects.clone() };
    if let Some(missing) = subjects.iter().find(|s| !index.contains(s)) {
        bail!("report subject '{missing}' is not in the feature index");
    }
    let maps = feature_maps(cfg, &subjects, &out.join("maps"))?;
    println!("{maps} feature maps -> {}", out.join("maps").display());
    latency(cfg, &subjects[0], &out)
}
