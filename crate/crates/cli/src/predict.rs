use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use connectome::config::RunConfig;
use connectome::eeg_io::load_recording;
use connectome::features::extract;
use connectome::pipeline::TrainedModel;

pub fn run(cfg: &RunConfig, model_path: &Path, input: &Path) -> Result<()> {
    let bytes = fs::read(model_path).with_context(|| format!("reading {}", model_path.display()))?;
    let model = TrainedModel::from_bytes(&bytes).with_context(|| format!("decoding {}", model_path.display()))?;
    let rec = load_recording(input, cfg.format, cfg.channels, cfg.rate)
        .with_context(|| format!("loading {}", input.display()))?;
    let features = extract(&rec, &cfg.extraction())?;
    let (label, probs) = model.predict_subject(&features)?;
    println!(
        "{}\t{}\t{}\tp_{}={:.6}\tp_{}={:.6}",
        features.subject_id,
        model.kind,
        model.classes.name(label),
        model.classes.name(0),
        probs[0],
        model.classes.name(1),
        probs[1]
    );
    Ok(())
}
