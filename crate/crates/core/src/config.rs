//! Line-based `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown or repeated
//! keys are errors. Relative paths resolve against the config file's
//! directory. Keys and defaults:
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `manifest` | required for `extract` | cohort CSV (`path,subject_id,label`) |
//! | `format` | `csv_matrix` | `csv_matrix` or `column_concat` |
//! | `channels` | `16` | electrodes per recording |
//! | `rate` | `128` | sampling rate, Hz |
//! | `classes` | `SZ,HC` | label names; the first is the positive class |
//! | `standardize` | `true` | z-score channels before VAR fitting |
//! | `order` | `5` | VAR order L |
//! | `max_order` | `0` | if > 0, log the BIC-selected order up to this value |
//! | `grid_step` | `0.25` | PDC frequency grid step, Hz |
//! | `exclude_self` | `true` | zero the PDC diagonal after band averaging |
//! | `bands` | `delta:1:4,theta:4:8,alpha:8:14,beta:14:30,gamma:30:64` | `name:lo:hi` list, half-open |
//! | `use_bands` | all | comma list of band names fed to PDC/CN models |
//! | `models` | all kinds plus `svm_linear` | comma list of model kinds |
//! | `seed` | `0` | master seed |
//! | `epochs` | `500` | training epochs |
//! | `folds` | `5` | cross-validation folds |
//! | `batch_size` | `0` | examples per step; 0 = full batch |
//! | `learning_rate` | `0.0001` | Adam learning rate |
//! | `decay` | `0.000001` | learning-rate decay per step |
//! | `dropout` | `0.5` | dropout ratio of dense layers |
//! | `val_fraction` | `0.15` | validation share of each fold's training subjects |
//! | `pool2d` | `none` | `none`, `avg` or `max` pooling after 2D convolutions |
//! | `svm_lambda` | `0.01` | SVM L2 regularization |
//! | `svm_iterations` | `2000` | SVM subgradient iterations |
//! | `output_dir` | `out` | models, metrics, curves and figures |
//! | `features_dir` | `<output_dir>/features` | feature containers |
//! | `latency_repetitions` | `1000` | repetitions per model in the latency table |
//! | `report_subjects` | first subject | comma list of subjects for feature-map dumps |
//! | `ascii_heatmaps` | `false` | also write ASCII renderings of feature maps |

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::eeg_io::{ClassNames, Format};
use crate::error::{Error, Result};
use crate::features::ExtractionConfig;
use crate::nn::{AdamConfig, PoolKind};
use crate::pipeline::cv::CvSettings;
use crate::pipeline::spec::{Architecture, ModelKind, TrainParams};
use crate::pipeline::svm::SvmParams;
use crate::spectral::{Band, BandSpec};

const KEYS: &[&str] = &[
    "manifest",
    "format",
    "channels",
    "rate",
    "classes",
    "standardize",
    "order",
    "max_order",
    "grid_step",
    "exclude_self",
    "bands",
    "use_bands",
    "models",
    "seed",
    "epochs",
    "folds",
    "batch_size",
    "learning_rate",
    "decay",
    "dropout",
    "val_fraction",
    "pool2d",
    "svm_lambda",
    "svm_iterations",
    "output_dir",
    "features_dir",
    "latency_repetitions",
    "report_subjects",
    "ascii_heatmaps",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub format: Format,
    pub channels: usize,
    pub rate: f64,
    pub classes: ClassNames,
    pub standardize: bool,
    pub order: usize,
    pub max_order: usize,
    pub grid_step: f64,
    pub exclude_self: bool,
    pub bands: BandSpec,
    pub use_bands: Option<Vec<String>>,
    pub models: Vec<ModelKind>,
    pub seed: u64,
    pub epochs: usize,
    pub folds: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub decay: f64,
    pub dropout: f64,
    pub val_fraction: f64,
    pub pool2d: Option<PoolKind>,
    pub svm_lambda: f64,
    pub svm_iterations: usize,
    pub output_dir: PathBuf,
    pub features_dir: PathBuf,
    pub latency_repetitions: usize,
    pub report_subjects: Vec<String>,
    pub ascii_heatmaps: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        let arch = Architecture::default();
        let svm = SvmParams::default();
        Self {
            manifest: None,
            format: Format::CsvMatrix,
            channels: 16,
            rate: 128.0,
            classes: ClassNames::default(),
            standardize: true,
            order: 5,
            max_order: 0,
            grid_step: crate::spectral::DEFAULT_GRID_STEP,
            exclude_self: true,
            bands: BandSpec::default(),
            use_bands: None,
            models: ModelKind::parse_list(
                "cnn2d_var,cnn2d_pdc,cnn1d_cn,fusion_feature,fusion_score,fusion_decision,svm_linear",
            )
            .expect("default model list"),
            seed: 0,
            epochs: TrainParams::default().epochs,
            folds: 5,
            batch_size: 0,
            learning_rate: adam.lr,
            decay: adam.decay,
            dropout: arch.dropout,
            val_fraction: 0.15,
            pool2d: None,
            svm_lambda: svm.lambda,
            svm_iterations: svm.iterations,
            output_dir: PathBuf::from("out"),
            features_dir: PathBuf::from("out/features"),
            latency_repetitions: crate::pipeline::timing::DEFAULT_REPETITIONS,
            report_subjects: Vec::new(),
            ascii_heatmaps: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str, line: usize) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse { line, message: format!("{key}: cannot parse '{v}'") })
}

fn parse_bool(key: &str, v: &str, line: usize) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Parse { line, message: format!("{key}: expected true or false, got '{v}'") }),
    }
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

/// Parses `name:lo:hi,...`.
pub fn parse_bands(v: &str) -> Result<BandSpec> {
    let bands = list(v)
        .iter()
        .map(|item| {
            let parts: Vec<&str> = item.split(':').collect();
            let [name, lo, hi] = parts[..] else {
                return Err(Error::Config(format!("band '{item}' is not name:lo:hi")));
            };
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("band '{item}': bad edge '{s}'")));
            Ok(Band::new(name.trim(), num(lo)?, num(hi)?))
        })
        .collect::<Result<Vec<_>>>()?;
    BandSpec::new(bands)
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        let mut features_dir = None;
        let resolve = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_relative() {
                base.join(p)
            } else {
                p
            }
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some((key, value)) = trimmed.split_once('=') else {
                return Err(Error::Parse { line, message: format!("expected key = value, got '{trimmed}'") });
            };
            let (key, v) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse { line, message: format!("unknown key '{key}'") });
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::Parse { line, message: format!("duplicate key '{key}'") });
            }
            let at = |e: Error| match e {
                Error::Parse { .. } => e,
                other => Error::Parse { line, message: other.to_string() },
            };
            match key {
                "manifest" => cfg.manifest = Some(resolve(v)),
                "format" => cfg.format = v.parse().map_err(at)?,
                "channels" => cfg.channels = parse_num(key, v, line)?,
                "rate" => cfg.rate = parse_num(key, v, line)?,
                "classes" => {
                    let names = list(v);
                    let [a, b] = &names[..] else {
                        return Err(Error::Parse { line, message: "classes needs exactly two names".into() });
                    };
                    cfg.classes = ClassNames([a.clone(), b.clone()]);
                }
                "standardize" => cfg.standardize = parse_bool(key, v, line)?,
                "order" => cfg.order = parse_num(key, v, line)?,
                "max_order" => cfg.max_order = parse_num(key, v, line)?,
                "grid_step" => cfg.grid_step = parse_num(key, v, line)?,
                "exclude_self" => cfg.exclude_self = parse_bool(key, v, line)?,
                "bands" => cfg.bands = parse_bands(v).map_err(at)?,
                "use_bands" => cfg.use_bands = Some(list(v)),
                "models" => cfg.models = ModelKind::parse_list(v).map_err(at)?,
                "seed" => cfg.seed = parse_num(key, v, line)?,
                "epochs" => cfg.epochs = parse_num(key, v, line)?,
                "folds" => cfg.folds = parse_num(key, v, line)?,
                "batch_size" => cfg.batch_size = parse_num(key, v, line)?,
                "learning_rate" => cfg.learning_rate = parse_num(key, v, line)?,
                "decay" => cfg.decay = parse_num(key, v, line)?,
                "dropout" => cfg.dropout = parse_num(key, v, line)?,
                "val_fraction" => cfg.val_fraction = parse_num(key, v, line)?,
                "pool2d" => {
                    cfg.pool2d = match v {
                        "none" => None,
                        "avg" => Some(PoolKind::Avg),
                        "max" => Some(PoolKind::Max),
                        _ => return Err(Error::Parse { line, message: format!("pool2d: unknown kind '{v}'") }),
                    }
                }
                "svm_lambda" => cfg.svm_lambda = parse_num(key, v, line)?,
                "svm_iterations" => cfg.svm_iterations = parse_num(key, v, line)?,
                "output_dir" => cfg.output_dir = resolve(v),
                "features_dir" => features_dir = Some(resolve(v)),
                "latency_repetitions" => cfg.latency_repetitions = parse_num(key, v, line)?,
                "report_subjects" => cfg.report_subjects = list(v),
                "ascii_heatmaps" => cfg.ascii_heatmaps = parse_bool(key, v, line)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        if !seen.contains("output_dir") {
            cfg.output_dir = base.join("out");
        }
        cfg.features_dir = features_dir.unwrap_or_else(|| cfg.output_dir.join("features"));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.channels < 2 {
            return bad(format!("channels must be at least 2, got {}", self.channels));
        }
        if !(self.rate > 0.0) {
            return bad(format!("rate must be positive, got {}", self.rate));
        }
        if self.order == 0 {
            return bad("order must be at least 1".into());
        }
        if !(self.grid_step > 0.0) {
            return bad(format!("grid_step must be positive, got {}", self.grid_step));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad(format!("val_fraction must be in [0, 1), got {}", self.val_fraction));
        }
        if !(self.learning_rate > 0.0) || self.decay < 0.0 {
            return bad("learning_rate must be positive and decay non-negative".into());
        }
        self.bands.check_nyquist(self.rate)?;
        self.band_indices()?;
        Ok(())
    }

    pub fn extraction(&self) -> ExtractionConfig {
        ExtractionConfig {
            order: self.order,
            standardize: self.standardize,
            bands: self.bands.clone(),
            grid_step: self.grid_step,
            exclude_self: self.exclude_self,
        }
    }

    /// Indices of `use_bands` within `bands`, if restricted.
    pub fn band_indices(&self) -> Result<Option<Vec<usize>>> {
        match &self.use_bands {
            None => Ok(None),
            Some(names) => {
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                Ok(Some(self.bands.select(&refs)?.1))
            }
        }
    }

    pub fn cv_settings(&self) -> Result<CvSettings> {
        Ok(CvSettings {
            folds: self.folds,
            seed: self.seed,
            val_fraction: self.val_fraction,
            arch: Architecture { dropout: self.dropout, pool2d: self.pool2d, ..Architecture::default() },
            train: TrainParams {
                epochs: self.epochs,
                batch_size: self.batch_size,
                adam: AdamConfig { lr: self.learning_rate, decay: self.decay, ..AdamConfig::default() },
            },
            svm: SvmParams { lambda: self.svm_lambda, iterations: self.svm_iterations },
            bands: self.band_indices()?,
            classes: self.classes.clone(),
            keep_models: true,
        })
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest.as_deref().ok_or_else(|| Error::Config("'manifest' is not set".into()))
    }
}
