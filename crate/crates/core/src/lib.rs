//! # connectome
//!
//! Directed EEG connectivity features and a multi-domain convolutional
//! ensemble for two-group subject classification.
//!
//! ```text
//! EEG (T x N) ─ eeg_io::standardize
//!   └─ var_model::fit_var (L = 5)        ─→ VAR tensor   N x N x L
//!        └─ spectral::band_pdc           ─→ PDC tensor   N x N x B
//!             └─ netmetrics::cn_features ─→ CN features  (2N + 2) x B
//!                  └─ pipeline (2D/1D CNNs, fusion, SVM, k-fold CV)
//! ```
//!
//! - [`eeg_io`]: recordings and cohort manifests
//! - [`var_model`]: least-squares VAR fitting and BIC order selection
//! - [`spectral`]: transfer matrix, PDC, band averaging
//! - [`netmetrics`]: strength, efficiency, clustering, transitivity
//! - [`nn`]: CNN engine with exact backprop and Adam
//! - [`pipeline`]: model configurations, training, fusion, cross-validation, metrics
//! - [`container`], [`config`], [`report`]: on-disk artifacts

pub mod binfmt;
pub mod config;
pub mod container;
pub mod eeg_io;
pub mod error;
pub mod features;
pub mod netmetrics;
pub mod nn;
pub mod pipeline;
pub mod report;
pub mod seed;
pub mod simulate;
pub mod spectral;
pub mod tensor;
pub mod var_model;

pub use error::{Error, Result};
pub use features::{Domain, ExtractionConfig, SubjectFeatures};
pub use tensor::Tensor;
