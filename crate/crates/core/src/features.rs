//! Per-subject feature extraction: VAR coefficients, band PDC, and network
//! topology.

use crate::eeg_io::{standardize, EegRecording, Label};
use crate::error::Result;
use crate::netmetrics::{cn_features, CnFeatureVector};
use crate::spectral::{band_pdc, BandSpec, PdcTensor, DEFAULT_GRID_STEP};
use crate::tensor::Tensor;
use crate::var_model::{fit_var, var_feature_tensor, VarModel};

/// The three feature domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    Var,
    Pdc,
    Cn,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::Var, Domain::Pdc, Domain::Cn];

    pub fn name(self) -> &'static str {
        match self {
            Domain::Var => "VAR",
            Domain::Pdc => "PDC",
            Domain::Cn => "CN",
        }
    }

    pub fn file_tag(self) -> &'static str {
        match self {
            Domain::Var => "var",
            Domain::Pdc => "pdc",
            Domain::Cn => "cn",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone)]
pub struct ExtractionConfig {
    pub order: usize,
    pub standardize: bool,
    pub bands: BandSpec,
    pub grid_step: f64,
    pub exclude_self: bool,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            order: 5,
            standardize: true,
            bands: BandSpec::default(),
            grid_step: DEFAULT_GRID_STEP,
            exclude_self: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubjectFeatures {
    pub subject_id: String,
    pub label: Option<Label>,
    /// `N x N x L`
    pub var: Tensor,
    /// `N x N x B`
    pub pdc: PdcTensor,
    /// `(2N + 2) x B`
    pub cn: CnFeatureVector,
}

impl SubjectFeatures {
    pub fn domain(&self, d: Domain) -> &Tensor {
        match d {
            Domain::Var => &self.var,
            Domain::Pdc => &self.pdc.values,
            Domain::Cn => &self.cn.values,
        }
    }
}

pub fn extract_with_model(rec: &EegRecording, cfg: &ExtractionConfig) -> Result<(SubjectFeatures, VarModel)> {
    let input = if cfg.standardize { standardize(rec) } else { rec.clone() };
    let model = fit_var(&input, cfg.order)?;
    let pdc = band_pdc(&model, rec.rate(), &cfg.bands, cfg.grid_step, cfg.exclude_self)?;
    let cn = cn_features(&pdc)?;
    let features = SubjectFeatures {
        subject_id: rec.subject_id.clone(),
        label: rec.label,
        var: var_feature_tensor(&model),
        pdc,
        cn,
    };
    Ok((features, model))
}

pub fn extract(rec: &EegRecording, cfg: &ExtractionConfig) -> Result<SubjectFeatures> {
    extract_with_model(rec, cfg).map(|(f, _)| f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::SyntheticCohort;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_for_sixteen_channels() {
        let cohort = SyntheticCohort { samples: 7680, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = cohort.subject_model(0, &mut rng);
        let rec = crate::simulate::simulate_var(&model, 7680, 128.0, &mut rng);
        let f = extract(&rec, &ExtractionConfig::default()).unwrap();
        assert_eq!(f.var.shape(), &[16, 16, 5]);
        assert_eq!(f.pdc.values.shape(), &[16, 16, 5]);
        assert_eq!(f.cn.values.shape(), &[34, 5]);
    }
}
