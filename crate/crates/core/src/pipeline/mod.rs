//! Model configurations, training, fusion, cross-validation and metrics.

pub mod cv;
pub mod dataset;
pub mod folds;
pub mod fusion;
pub mod metrics;
pub mod model_file;
pub mod predictions;
pub mod spec;
pub mod svm;
pub mod timing;
pub mod train;

pub use cv::{cross_validate, CvOutcome, CvSettings, LeakageAudit};
pub use dataset::{Example, Normalizer};
pub use folds::{stratified_kfold, stratified_split, FoldPlan};
pub use fusion::{averaging_score_head, majority_vote, score_fusion_forward};
pub use metrics::{evaluate, MetricsDocument, MetricsReport, Scores, Summary};
pub use model_file::{ModelBody, TrainedModel};
pub use spec::{Architecture, ModelKind, TrainParams};
pub use svm::{train_svm, LinearSvm, SvmParams};
pub use timing::{time_classification, LatencyRow};
pub use train::{train, LearningCurve};
