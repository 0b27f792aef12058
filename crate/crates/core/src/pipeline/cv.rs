//! Stratified k-fold cross-validation over every requested model kind.
//!
//! Within a fold the non-test subjects are split into train and validation
//! sets. Normalizers are fitted on the train set, networks select their epoch
//! on the validation set, and the held-out fold is only ever predicted.
//! Every training call is recorded in a [`LeakageAudit`] and checked against
//! the fold's test subjects.

use std::collections::{BTreeMap, BTreeSet};

use crate::eeg_io::{ClassNames, Label};
use crate::error::{Error, Result};
use crate::features::{Domain, SubjectFeatures};
use crate::nn::{argmax, Network};
use crate::seed;
use crate::tensor::Tensor;

use super::dataset::{Example, Normalizer};
use super::folds::{stratified_kfold, stratified_split, FoldPlan};
use super::fusion::{averaging_score_head, stack_scores};
use super::metrics::{evaluate, MetricsReport};
use super::model_file::{select_bands, ModelBody, TrainedModel};
use super::spec::{Architecture, ModelKind, TrainParams};
use super::svm::{train_svm, SvmParams};
use super::train::{train, LearningCurve};

#[derive(Debug, Clone)]
pub struct CvSettings {
    pub folds: usize,
    pub seed: u64,
    pub val_fraction: f64,
    pub arch: Architecture,
    pub train: TrainParams,
    pub svm: SvmParams,
    /// Band indices kept from PDC and CN features, if restricted.
    pub bands: Option<Vec<usize>>,
    pub classes: ClassNames,
    /// Keep trained models in the outcome (needed to save them).
    pub keep_models: bool,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            val_fraction: 0.15,
            arch: Architecture::default(),
            train: TrainParams::default(),
            svm: SvmParams::default(),
            bands: None,
            classes: ClassNames::default(),
            keep_models: false,
        }
    }
}

/// Subjects passed to one training call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingCall {
    pub fold: usize,
    pub purpose: String,
    pub subjects: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LeakageAudit {
    pub calls: Vec<TrainingCall>,
}

impl LeakageAudit {
    /// True when no training call of a fold saw any of that fold's test
    /// subjects.
    pub fn is_clean(&self, plan: &FoldPlan) -> bool {
        self.calls.iter().all(|c| {
            let test: BTreeSet<usize> = plan.test_indices(c.fold).into_iter().collect();
            c.subjects.iter().all(|s| {
                plan.subject_ids.iter().position(|id| id == s).map_or(true, |i| !test.contains(&i))
            })
        })
    }
}

#[derive(Debug, Clone)]
pub struct ModelFoldResult {
    pub kind: ModelKind,
    pub test_ids: Vec<String>,
    pub test_labels: Vec<Label>,
    pub predictions: Vec<Label>,
    pub probabilities: Vec<Vec<f64>>,
    pub model: Option<TrainedModel>,
}

#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold: usize,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub models: Vec<ModelFoldResult>,
    /// Learning curve per trained network, keyed by a descriptive name.
    pub curves: Vec<(String, LearningCurve)>,
    pub calls: Vec<TrainingCall>,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub plan: FoldPlan,
    pub folds: Vec<FoldResult>,
    /// Folds that failed, with the error message.
    pub failures: Vec<(usize, String)>,
    /// One row per model kind, over the successful folds.
    pub reports: Vec<MetricsReport>,
    pub audit: LeakageAudit,
}

struct FoldData<'a> {
    subjects: &'a [SubjectFeatures],
    labels: &'a [Label],
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
    /// Normalized tensors for every subject, per domain.
    prepared: BTreeMap<Domain, Vec<Tensor>>,
    normalizers: BTreeMap<Domain, Normalizer>,
}

impl FoldData<'_> {
    fn examples(&self, idx: &[usize], domains: &[Domain]) -> Vec<Example> {
        idx.iter()
            .map(|&i| Example {
                subject_id: self.subjects[i].subject_id.clone(),
                inputs: domains.iter().map(|d| self.prepared[d][i].clone()).collect(),
                label: self.labels[i],
            })
            .collect()
    }

    fn ids(&self, idx: &[usize]) -> Vec<String> {
        idx.iter().map(|&i| self.subjects[i].subject_id.clone()).collect()
    }

    fn shape(&self, d: Domain) -> Vec<usize> {
        self.prepared[&d][0].shape().to_vec()
    }
}

/// Runs `k`-fold cross-validation of `kinds` on labeled `subjects`.
pub fn cross_validate(subjects: &[SubjectFeatures], kinds: &[ModelKind], settings: &CvSettings) -> Result<CvOutcome> {
    if kinds.is_empty() {
        return Err(Error::Config("no models to evaluate".into()));
    }
    let labels = subjects
        .iter()
        .map(|s| s.label.ok_or_else(|| Error::validation(format!("subject {} has no label", s.subject_id))))
        .collect::<Result<Vec<Label>>>()?;
    let ids: Vec<String> = subjects.iter().map(|s| s.subject_id.clone()).collect();
    let plan = stratified_kfold(&ids, &labels, settings.folds, seed::derive(settings.seed, "folds"))?;

    let run = |f: usize| run_fold(subjects, &labels, &plan, f, kinds, settings);
    #[cfg(feature = "parallel")]
    let results: Vec<Result<FoldResult>> = {
        use rayon::prelude::*;
        (0..plan.k).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<FoldResult>> = (0..plan.k).map(run).collect();

    let mut folds = Vec::new();
    let mut failures = Vec::new();
    for (f, r) in results.into_iter().enumerate() {
        match r {
            Ok(fr) => folds.push(fr),
            Err(e) => {
                log::error!("fold {f} failed: {e}");
                failures.push((f, e.to_string()));
            }
        }
    }
    let audit = LeakageAudit { calls: folds.iter().flat_map(|f| f.calls.clone()).collect() };
    if !audit.is_clean(&plan) {
        return Err(Error::validation("a training call saw test-fold subjects"));
    }
    let mut reports = Vec::new();
    for (k, kind) in kinds.iter().enumerate() {
        let scores = folds
            .iter()
            .map(|f| {
                let m = &f.models[k];
                evaluate(&m.predictions, &m.test_labels, 0)
            })
            .collect::<Result<Vec<_>>>()?;
        reports.push(MetricsReport::from_folds(kind.name(), kind.feature_label(), scores));
    }
    Ok(CvOutcome { plan, folds, failures, reports, audit })
}

fn domain_label(d: Domain) -> String {
    ModelKind::cnn_for(d).name().to_string()
}

fn run_fold(
    subjects: &[SubjectFeatures],
    labels: &[Label],
    plan: &FoldPlan,
    f: usize,
    kinds: &[ModelKind],
    s: &CvSettings,
) -> Result<FoldResult> {
    let test = plan.test_indices(f);
    let rest = plan.train_indices(f);
    let (train_idx, val_idx) = stratified_split(&rest, labels, s.val_fraction, seed::derive_indexed(s.seed, "split", f as u64))?;
    let bands = s.bands.as_deref();

    let needed: BTreeSet<Domain> = kinds.iter().flat_map(|k| k.domains()).collect();
    let mut prepared = BTreeMap::new();
    let mut normalizers = BTreeMap::new();
    for &d in &needed {
        let raw = subjects
            .iter()
            .map(|sf| select_bands(d, sf.domain(d), bands))
            .collect::<Result<Vec<_>>>()?;
        let fit_on: Vec<&Tensor> = train_idx.iter().map(|&i| &raw[i]).collect();
        let norm = Normalizer::fit(&fit_on)?;
        prepared.insert(d, raw.iter().map(|t| norm.apply(t)).collect::<Result<Vec<_>>>()?);
        normalizers.insert(d, norm);
    }
    let data = FoldData { subjects, labels, train: train_idx, val: val_idx, test, prepared, normalizers };

    let mut calls = Vec::new();
    let mut curves = Vec::new();
    let record = |purpose: &str, calls: &mut Vec<TrainingCall>| {
        let mut subjects = data.ids(&data.train);
        subjects.extend(data.ids(&data.val));
        calls.push(TrainingCall { fold: f, purpose: purpose.to_string(), subjects });
    };

    // Single-domain CNNs are shared by the single, score and decision kinds.
    let mut domain_nets: BTreeMap<Domain, Network> = BTreeMap::new();
    let fusion_uses_cnns = kinds.iter().any(|k| matches!(k, ModelKind::FusionScore | ModelKind::FusionDecision));
    for &d in &needed {
        let direct = kinds.contains(&ModelKind::cnn_for(d));
        if !(direct || fusion_uses_cnns) {
            continue;
        }
        let name = domain_label(d);
        let mut rng = seed::rng(seed::derive_indexed(s.seed, &format!("init/{name}"), f as u64), "weights");
        let net = s.arch.domain_network(d, &data.shape(d), &mut rng)?;
        record(&name, &mut calls);
        let (net, curve) = train(
            net,
            &data.examples(&data.train, &[d]),
            &data.examples(&data.val, &[d]),
            &s.train,
            seed::derive_indexed(s.seed, &format!("train/{name}"), f as u64),
        )?;
        log::info!("fold {f}: {name} best epoch {:?}", curve.best_epoch);
        curves.push((name, curve));
        domain_nets.insert(d, net);
    }

    let mut models = Vec::new();
    for &kind in kinds {
        let domains = kind.domains();
        let body = match kind {
            ModelKind::Cnn2dVar | ModelKind::Cnn2dPdc | ModelKind::Cnn1dCn => {
                ModelBody::Network(domain_nets[&domains[0]].clone())
            }
            ModelKind::FusionDecision => ModelBody::DecisionFusion {
                domains: domains.iter().map(|d| domain_nets[d].clone()).collect(),
            },
            ModelKind::FusionScore => {
                let nets: Vec<Network> = domains.iter().map(|d| domain_nets[d].clone()).collect();
                let to_scores = |idx: &[usize]| -> Result<Vec<Example>> {
                    data.examples(idx, &domains)
                        .into_iter()
                        .map(|ex| {
                            let probs = nets
                                .iter()
                                .zip(&ex.inputs)
                                .map(|(n, x)| crate::nn::Classifier::predict_proba(n, &[x]))
                                .collect::<Result<Vec<_>>>()?;
                            Ok(Example { inputs: vec![stack_scores(&probs)], ..ex })
                        })
                        .collect()
                };
                record("fusion_score_head", &mut calls);
                let (head, curve) = train(
                    averaging_score_head(domains.len())?,
                    &to_scores(&data.train)?,
                    &to_scores(&data.val)?,
                    &s.train,
                    seed::derive_indexed(s.seed, "train/fusion_score_head", f as u64),
                )?;
                curves.push(("fusion_score_head".into(), curve));
                ModelBody::ScoreFusion { domains: nets, head }
            }
            ModelKind::FusionFeature => {
                let shapes: Vec<Vec<usize>> = domains.iter().map(|&d| data.shape(d)).collect();
                let mut rng = seed::rng(seed::derive_indexed(s.seed, "init/fusion_feature", f as u64), "weights");
                let net = s.arch.feature_fusion(&shapes, &mut rng)?;
                record("fusion_feature", &mut calls);
                let (net, curve) = train(
                    net,
                    &data.examples(&data.train, &domains),
                    &data.examples(&data.val, &domains),
                    &s.train,
                    seed::derive_indexed(s.seed, "train/fusion_feature", f as u64),
                )?;
                curves.push(("fusion_feature".into(), curve));
                ModelBody::FeatureFusion(net)
            }
            ModelKind::Svm(d) => {
                let idx: Vec<usize> = data.train.iter().chain(&data.val).copied().collect();
                let xs: Vec<Vec<f64>> = idx.iter().map(|&i| data.prepared[&d][i].data().to_vec()).collect();
                let ys: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
                record(kind.name(), &mut calls);
                ModelBody::Svm(train_svm(&xs, &ys, &s.svm)?)
            }
        };
        let model = TrainedModel {
            kind,
            classes: s.classes.clone(),
            bands: s.bands.clone(),
            normalizers: domains.iter().map(|d| data.normalizers[d].clone()).collect(),
            body,
        };
        let mut predictions = Vec::with_capacity(data.test.len());
        let mut probabilities = Vec::with_capacity(data.test.len());
        for ex in data.examples(&data.test, &domains) {
            let p = model.proba_prepared(&ex.inputs)?;
            predictions.push(argmax(&p));
            probabilities.push(p);
        }
        models.push(ModelFoldResult {
            kind,
            test_ids: data.ids(&data.test),
            test_labels: data.test.iter().map(|&i| labels[i]).collect(),
            predictions,
            probabilities,
            model: s.keep_models.then_some(model),
        });
    }

    let test_ids: BTreeSet<String> = data.ids(&data.test).into_iter().collect();
    if calls.iter().any(|c| c.subjects.iter().any(|id| test_ids.contains(id))) {
        return Err(Error::validation(format!("fold {f}: test subjects reached a training call")));
    }
    Ok(FoldResult {
        fold: f,
        train_ids: data.ids(&data.train),
        val_ids: data.ids(&data.val),
        models,
        curves,
        calls,
    })
}
