//! A trained classifier bundled with its normalizers, and its file format.
//!
//! Layout: magic `CNNMODEL`, major and minor version (`u16` each), model kind
//! code, class names, optional band selection, one normalizer per consumed
//! domain, then the body (networks in the format of [`crate::nn::io`] or SVM
//! parameters). A CRC-32 trailer covers everything before it.

use crate::binfmt::{BinReader, BinWriter};
use crate::eeg_io::{ClassNames, Label};
use crate::error::{Error, Result};
use crate::features::{Domain, SubjectFeatures};
use crate::nn::io::{read_network, write_network};
use crate::nn::{argmax, Classifier, FeatureFusionNet, Network};
use crate::tensor::Tensor;

use super::dataset::Normalizer;
use super::fusion::{majority_vote, stack_scores};
use super::spec::ModelKind;
use super::svm::LinearSvm;

pub const MODEL_MAGIC: &[u8; 8] = b"CNNMODEL";
pub const MODEL_MAJOR: u16 = 1;
pub const MODEL_MINOR: u16 = 0;

#[derive(Debug, Clone, PartialEq)]
pub enum ModelBody {
    Network(Network),
    FeatureFusion(FeatureFusionNet),
    ScoreFusion { domains: Vec<Network>, head: Network },
    DecisionFusion { domains: Vec<Network> },
    Svm(LinearSvm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub classes: ClassNames,
    /// Band indices kept from PDC and CN tensors, if restricted.
    pub bands: Option<Vec<usize>>,
    /// One per domain of `kind.domains()`, in that order.
    pub normalizers: Vec<Normalizer>,
    pub body: ModelBody,
}

/// Restricts the last axis of PDC and CN tensors to `bands`.
pub fn select_bands(domain: Domain, t: &Tensor, bands: Option<&[usize]>) -> Result<Tensor> {
    match (domain, bands) {
        (Domain::Pdc | Domain::Cn, Some(idx)) => t.select_last_axis(idx),
        _ => Ok(t.clone()),
    }
}

impl TrainedModel {
    /// Band-selects and normalizes raw domain tensors (in `kind.domains()`
    /// order).
    pub fn prepare(&self, raw: &[&Tensor]) -> Result<Vec<Tensor>> {
        let domains = self.kind.domains();
        if raw.len() != domains.len() {
            return Err(Error::shape(format!("{} expects {} inputs, got {}", self.kind, domains.len(), raw.len())));
        }
        domains
            .iter()
            .zip(raw)
            .zip(&self.normalizers)
            .map(|((&d, t), n)| n.apply(&select_bands(d, t, self.bands.as_deref())?))
            .collect()
    }

    /// Class probabilities from prepared inputs. Decision fusion reports
    /// vote fractions and the SVM a one-hot vector.
    pub fn proba_prepared(&self, inputs: &[Tensor]) -> Result<Vec<f64>> {
        match &self.body {
            ModelBody::Network(net) => net.predict_proba(&[&inputs[0]]),
            ModelBody::FeatureFusion(net) => net.predict_proba(&inputs.iter().collect::<Vec<_>>()),
            ModelBody::ScoreFusion { domains, head } => {
                let probs = domain_probs(domains, inputs)?;
                Ok(head.predict(&stack_scores(&probs))?.into_data())
            }
            ModelBody::DecisionFusion { domains } => {
                let votes: Vec<Label> = domain_probs(domains, inputs)?.iter().map(|p| argmax(p)).collect();
                let winner = majority_vote(&votes)?;
                let share = votes.iter().filter(|&&v| v == winner).count() as f64 / votes.len() as f64;
                let mut p = vec![1.0 - share; 2];
                p[winner] = share;
                Ok(p)
            }
            ModelBody::Svm(svm) => {
                let mut p = vec![0.0; 2];
                p[svm.predict(inputs[0].data())] = 1.0;
                Ok(p)
            }
        }
    }

    pub fn predict_proba(&self, raw: &[&Tensor]) -> Result<Vec<f64>> {
        self.proba_prepared(&self.prepare(raw)?)
    }

    pub fn predict(&self, raw: &[&Tensor]) -> Result<Label> {
        Ok(argmax(&self.predict_proba(raw)?))
    }

    /// Predicted label and probabilities for one subject's features.
    pub fn predict_subject(&self, f: &SubjectFeatures) -> Result<(Label, Vec<f64>)> {
        let raw: Vec<&Tensor> = self.kind.domains().iter().map(|&d| f.domain(d)).collect();
        let p = self.predict_proba(&raw)?;
        Ok((argmax(&p), p))
    }

    /// The network used for feature-map visualization of `domain`, if any.
    pub fn domain_network(&self, domain: Domain) -> Option<&Network> {
        let pos = self.kind.domains().iter().position(|&d| d == domain)?;
        match &self.body {
            ModelBody::Network(n) => Some(n),
            ModelBody::ScoreFusion { domains, .. } | ModelBody::DecisionFusion { domains } => domains.get(pos),
            ModelBody::FeatureFusion(f) => f.branches.get(pos),
            ModelBody::Svm(_) => None,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BinWriter::new();
        w.bytes(MODEL_MAGIC);
        w.u16(MODEL_MAJOR);
        w.u16(MODEL_MINOR);
        w.u8(self.kind.code());
        w.str(&self.classes.0[0]);
        w.str(&self.classes.0[1]);
        match &self.bands {
            None => w.u8(0),
            Some(b) => {
                w.u8(1);
                w.dims(b);
            }
        }
        w.u8(self.normalizers.len() as u8);
        for n in &self.normalizers {
            n.write(&mut w);
        }
        match &self.body {
            ModelBody::Network(net) => write_network(&mut w, net),
            ModelBody::FeatureFusion(f) => {
                w.u8(f.branches.len() as u8);
                for b in &f.branches {
                    write_network(&mut w, b);
                }
                write_network(&mut w, &f.head);
            }
            ModelBody::ScoreFusion { domains, head } => {
                w.u8(domains.len() as u8);
                for d in domains {
                    write_network(&mut w, d);
                }
                write_network(&mut w, head);
            }
            ModelBody::DecisionFusion { domains } => {
                w.u8(domains.len() as u8);
                for d in domains {
                    write_network(&mut w, d);
                }
            }
            ModelBody::Svm(svm) => svm.write(&mut w),
        }
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = BinReader::checked(data)?;
        if r.bytes(8)? != MODEL_MAGIC {
            return Err(Error::format("not a model file (bad magic)"));
        }
        let major = r.u16()?;
        let _minor = r.u16()?;
        if major != MODEL_MAJOR {
            return Err(Error::format(format!("unsupported model format version {major}")));
        }
        let kind = ModelKind::from_code(r.u8()?)?;
        let classes = ClassNames([r.str()?, r.str()?]);
        let bands = match r.u8()? {
            0 => None,
            _ => Some(r.dims()?),
        };
        let count = r.u8()? as usize;
        let normalizers = (0..count).map(|_| Normalizer::read(&mut r)).collect::<Result<Vec<_>>>()?;
        if count != kind.domains().len() {
            return Err(Error::format(format!("{kind} needs {} normalizers, file has {count}", kind.domains().len())));
        }
        let read_many = |r: &mut BinReader<'_>| -> Result<Vec<Network>> {
            let n = r.u8()? as usize;
            (0..n).map(|_| read_network(r)).collect()
        };
        let body = match kind {
            ModelKind::Cnn2dVar | ModelKind::Cnn2dPdc | ModelKind::Cnn1dCn => ModelBody::Network(read_network(&mut r)?),
            ModelKind::FusionFeature => {
                let branches = read_many(&mut r)?;
                let head = read_network(&mut r)?;
                ModelBody::FeatureFusion(FeatureFusionNet::new(branches, head)?)
            }
            ModelKind::FusionScore => {
                let domains = read_many(&mut r)?;
                let head = read_network(&mut r)?;
                ModelBody::ScoreFusion { domains, head }
            }
            ModelKind::FusionDecision => ModelBody::DecisionFusion { domains: read_many(&mut r)? },
            ModelKind::Svm(_) => ModelBody::Svm(LinearSvm::read(&mut r)?),
        };
        r.expect_end()?;
        Ok(Self { kind, classes, bands, normalizers, body })
    }
}

fn domain_probs(domains: &[Network], inputs: &[Tensor]) -> Result<Vec<Vec<f64>>> {
    if domains.len() != inputs.len() {
        return Err(Error::shape(format!("{} domain networks for {} inputs", domains.len(), inputs.len())));
    }
    domains.iter().zip(inputs).map(|(n, x)| n.predict_proba(&[x])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::spec::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ones(shape: &[usize]) -> Tensor {
        Tensor::new(shape.to_vec(), vec![1.0; shape.iter().product()]).unwrap()
    }

    #[test]
    fn decision_model_round_trip() {
        let arch = Architecture { conv2d_filters: vec![2, 2], dense2d: 4, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shapes = [vec![4, 4, 2], vec![4, 4, 3], vec![10, 3]];
        let domains: Vec<Network> = Domain::ALL
            .iter()
            .zip(&shapes)
            .map(|(&d, s)| arch.domain_network(d, s, &mut rng).unwrap())
            .collect();
        let normalizers = shapes.iter().map(|s| Normalizer::fit(&[&ones(s)]).unwrap()).collect();
        let model = TrainedModel {
            kind: ModelKind::FusionDecision,
            classes: ClassNames::default(),
            bands: Some(vec![0, 2, 4]),
            normalizers,
            body: ModelBody::DecisionFusion { domains },
        };
        let bytes = model.to_bytes();
        assert_eq!(&bytes[..8], MODEL_MAGIC);
        let back = TrainedModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, model);

        let mut corrupt = bytes.clone();
        corrupt[20] ^= 1;
        assert!(TrainedModel::from_bytes(&corrupt).is_err());
    }
}
