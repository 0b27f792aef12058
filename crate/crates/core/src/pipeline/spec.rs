//! Model kinds, architecture hyperparameters and network construction.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::features::Domain;
use crate::nn::{AdamConfig, FeatureFusionNet, Network, NetworkBuilder, PoolKind};

/// A classifier configuration evaluated by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Cnn2dVar,
    Cnn2dPdc,
    Cnn1dCn,
    FusionFeature,
    FusionScore,
    FusionDecision,
    Svm(Domain),
}

impl ModelKind {
    pub const CNNS: [ModelKind; 3] = [ModelKind::Cnn2dVar, ModelKind::Cnn2dPdc, ModelKind::Cnn1dCn];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cnn2dVar => "cnn2d_var",
            ModelKind::Cnn2dPdc => "cnn2d_pdc",
            ModelKind::Cnn1dCn => "cnn1d_cn",
            ModelKind::FusionFeature => "fusion_feature",
            ModelKind::FusionScore => "fusion_score",
            ModelKind::FusionDecision => "fusion_decision",
            ModelKind::Svm(Domain::Var) => "svm_var",
            ModelKind::Svm(Domain::Pdc) => "svm_pdc",
            ModelKind::Svm(Domain::Cn) => "svm_cn",
        }
    }

    /// The single-domain CNN for `d`.
    pub fn cnn_for(d: Domain) -> ModelKind {
        match d {
            Domain::Var => ModelKind::Cnn2dVar,
            Domain::Pdc => ModelKind::Cnn2dPdc,
            Domain::Cn => ModelKind::Cnn1dCn,
        }
    }

    /// Feature domains the model consumes, in input order.
    pub fn domains(self) -> Vec<Domain> {
        match self {
            ModelKind::Cnn2dVar => vec![Domain::Var],
            ModelKind::Cnn2dPdc => vec![Domain::Pdc],
            ModelKind::Cnn1dCn => vec![Domain::Cn],
            ModelKind::Svm(d) => vec![d],
            _ => Domain::ALL.to_vec(),
        }
    }

    /// Feature-set label used in result tables.
    pub fn feature_label(self) -> String {
        self.domains().iter().map(|d| d.name()).collect::<Vec<_>>().join("+")
    }

    pub fn code(self) -> u8 {
        match self {
            ModelKind::Cnn2dVar => 1,
            ModelKind::Cnn2dPdc => 2,
            ModelKind::Cnn1dCn => 3,
            ModelKind::FusionFeature => 4,
            ModelKind::FusionScore => 5,
            ModelKind::FusionDecision => 6,
            ModelKind::Svm(d) => 7 + d.index() as u8,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Ok(match code {
            1 => ModelKind::Cnn2dVar,
            2 => ModelKind::Cnn2dPdc,
            3 => ModelKind::Cnn1dCn,
            4 => ModelKind::FusionFeature,
            5 => ModelKind::FusionScore,
            6 => ModelKind::FusionDecision,
            7 => ModelKind::Svm(Domain::Var),
            8 => ModelKind::Svm(Domain::Pdc),
            9 => ModelKind::Svm(Domain::Cn),
            other => return Err(Error::format(format!("unknown model kind code {other}"))),
        })
    }

    /// Parses a comma-separated model list. `svm_linear` expands to one SVM
    /// per domain.
    pub fn parse_list(text: &str) -> Result<Vec<ModelKind>> {
        let mut out = Vec::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if item == "svm_linear" {
                out.extend(Domain::ALL.iter().map(|&d| ModelKind::Svm(d)));
            } else {
                out.push(item.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no models listed".into()));
        }
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = [
            ModelKind::Cnn2dVar,
            ModelKind::Cnn2dPdc,
            ModelKind::Cnn1dCn,
            ModelKind::FusionFeature,
            ModelKind::FusionScore,
            ModelKind::FusionDecision,
            ModelKind::Svm(Domain::Var),
            ModelKind::Svm(Domain::Pdc),
            ModelKind::Svm(Domain::Cn),
        ];
        all.into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind '{s}'")))
    }
}

/// Layer sizes of the 2D and 1D networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Architecture {
    pub conv2d_filters: Vec<usize>,
    pub conv2d_kernel: usize,
    pub dense2d: usize,
    pub conv1d_filters: usize,
    pub conv1d_kernel: usize,
    pub pool1d_size: usize,
    pub pool1d_stride: usize,
    pub dense1d: usize,
    pub fusion_dense: usize,
    pub dropout: f64,
    /// Optional 2D pooling after each 2D convolution, for the pooling ablation.
    pub pool2d: Option<PoolKind>,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            conv2d_filters: vec![128, 64],
            conv2d_kernel: 3,
            dense2d: 64,
            conv1d_filters: 8,
            conv1d_kernel: 3,
            pool1d_size: 2,
            pool1d_stride: 2,
            dense1d: 32,
            fusion_dense: 64,
            dropout: 0.5,
            pool2d: None,
        }
    }
}

impl Architecture {
    /// Convolutional part of the 2D network, ending at the flatten layer.
    pub fn cnn2d_trunk<R: Rng + ?Sized>(&self, input: &[usize], rng: &mut R) -> Result<Network> {
        check_rank(input, 3, "2D network")?;
        let mut b = NetworkBuilder::new(input.to_vec(), rng);
        for &f in &self.conv2d_filters {
            b.conv2d(f, self.conv2d_kernel)?.relu()?;
            if let Some(kind) = self.pool2d {
                b.pool2d(kind, 2, 2)?;
            }
        }
        b.flatten()?;
        b.build()
    }

    pub fn cnn1d_trunk<R: Rng + ?Sized>(&self, input: &[usize], rng: &mut R) -> Result<Network> {
        check_rank(input, 2, "1D network")?;
        let mut b = NetworkBuilder::new(input.to_vec(), rng);
        b.conv1d(self.conv1d_filters, self.conv1d_kernel)?
            .relu()?
            .avg_pool1d(self.pool1d_size, self.pool1d_stride)?
            .flatten()?;
        b.build()
    }

    /// Dense classifier head: `dense(hidden) -> ReLU -> dropout -> dense(2) -> softmax`.
    pub fn head<R: Rng + ?Sized>(&self, inputs: usize, hidden: usize, rng: &mut R) -> Result<Network> {
        let mut b = NetworkBuilder::new(vec![inputs], rng);
        b.dense(hidden)?.relu()?.dropout(self.dropout)?.dense(2)?.softmax()?;
        b.build()
    }

    pub fn cnn2d<R: Rng + ?Sized>(&self, input: &[usize], rng: &mut R) -> Result<Network> {
        let trunk = self.cnn2d_trunk(input, rng)?;
        let head = self.head(trunk.output_shape()[0], self.dense2d, rng)?;
        join(trunk, head)
    }

    pub fn cnn1d<R: Rng + ?Sized>(&self, input: &[usize], rng: &mut R) -> Result<Network> {
        let trunk = self.cnn1d_trunk(input, rng)?;
        let head = self.head(trunk.output_shape()[0], self.dense1d, rng)?;
        join(trunk, head)
    }

    /// The single-domain network for `domain` given its feature shape.
    pub fn domain_network<R: Rng + ?Sized>(&self, domain: Domain, input: &[usize], rng: &mut R) -> Result<Network> {
        match domain {
            Domain::Var | Domain::Pdc => self.cnn2d(input, rng),
            Domain::Cn => self.cnn1d(input, rng),
        }
    }

    /// Three convolutional trunks whose flattened maps are concatenated into
    /// one dense head. `inputs` are the VAR, PDC and CN shapes.
    pub fn feature_fusion<R: Rng + ?Sized>(&self, inputs: &[Vec<usize>], rng: &mut R) -> Result<FeatureFusionNet> {
        if inputs.len() != 3 {
            return Err(Error::shape(format!("feature fusion takes 3 inputs, got {}", inputs.len())));
        }
        let branches = vec![
            self.cnn2d_trunk(&inputs[0], rng)?,
            self.cnn2d_trunk(&inputs[1], rng)?,
            self.cnn1d_trunk(&inputs[2], rng)?,
        ];
        let total = branches.iter().map(|b| b.output_shape()[0]).sum();
        let head = self.head(total, self.fusion_dense, rng)?;
        FeatureFusionNet::new(branches, head)
    }
}

fn check_rank(shape: &[usize], rank: usize, what: &str) -> Result<()> {
    if shape.len() != rank || shape.contains(&0) {
        return Err(Error::shape(format!(
            "{what} needs a rank-{rank} input, got {}",
            crate::tensor::shape_string(shape)
        )));
    }
    Ok(())
}

fn join(trunk: Network, head: Network) -> Result<Network> {
    let mut layers = trunk.layers().to_vec();
    layers.extend_from_slice(head.layers());
    Network::new(trunk.input_shape().to_vec(), layers)
}

/// Optimizer and schedule settings for one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    /// Examples per gradient step; 0 means full batch.
    pub batch_size: usize,
    pub adam: AdamConfig,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self { epochs: 500, batch_size: 0, adam: AdamConfig::default() }
    }
}
