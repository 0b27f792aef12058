//! Output layout shared by the subcommands.
//!
//! ```text
//! <features_dir>/index.csv                 subject_id,label
//! <features_dir>/<id>.{var,pdc,cn}.feat    feature containers
//! <output_dir>/folds.csv                   subject_id,fold
//! <output_dir>/predictions.csv             out-of-fold predictions
//! <output_dir>/metrics.json                evaluation document
//! <output_dir>/models/<kind>.fold<k>.model
//! <output_dir>/curves/<network>.fold<k>.csv
//! <output_dir>/figures/...                 report output
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use connectome::config::RunConfig;
use connectome::container::read_subject;
use connectome::eeg_io::{ClassNames, Label};
use connectome::SubjectFeatures;

pub fn index_path(cfg: &RunConfig) -> PathBuf {
    cfg.features_dir.join("index.csv")
}

pub fn models_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("models")
}

pub fn curves_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("curves")
}

pub fn figures_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("figures")
}

pub fn predictions_path(cfg: &RunConfig) -> PathBuf {
    cfg.output_dir.join("predictions.csv")
}

pub fn model_file_name(kind: &str, fold: usize) -> String {
    format!("{kind}.fold{fold}.model")
}

pub fn write_index(path: &Path, rows: &[(String, Option<Label>)], classes: &ClassNames) -> Result<()> {
    let mut text = String::from("subject_id,label\n");
    for (id, label) in rows {
        text.push_str(&format!("{id},{}\n", label.map(|l| classes.name(l)).unwrap_or("")));
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_index(cfg: &RunConfig) -> Result<Vec<String>> {
    let path = index_path(cfg);
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading {} (run `extract` first)", path.display()))?;
    let ids: Vec<String> = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').next().unwrap_or("").to_string())
        .collect();
    if ids.is_empty() {
        bail!("feature index {} lists no subjects", path.display());
    }
    Ok(ids)
}

/// Every subject in the feature index, in index order.
pub fn load_features(cfg: &RunConfig) -> Result<Vec<SubjectFeatures>> {
    read_index(cfg)?
        .iter()
        .map(|id| read_subject(&cfg.features_dir, id).with_context(|| format!("loading features of {id}")))
        .collect()
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
