//! Seeded VAR simulation and synthetic cohorts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::eeg_io::{EegRecording, Label};
use crate::var_model::VarModel;

const BURN_IN: usize = 500;

/// Draws `samples` observations from `model` with Gaussian innovations of
/// covariance `model.noise_cov()`, discarding a burn-in prefix.
pub fn simulate_var<R: Rng + ?Sized>(model: &VarModel, samples: usize, rate: f64, rng: &mut R) -> EegRecording {
    let n = model.channels();
    let order = model.order();
    let chol = model
        .noise_cov()
        .clone()
        .cholesky()
        .expect("noise covariance must be positive definite for simulation")
        .l();
    let total = samples + BURN_IN;
    let mut hist: Vec<DVector<f64>> = Vec::with_capacity(total);
    let mut out = Vec::with_capacity(samples * n);
    for t in 0..total {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut y = &chol * z;
        for lag in 1..=order.min(t) {
            y += model.coeff(lag) * &hist[t - lag];
        }
        if t >= BURN_IN {
            out.extend(y.iter());
        }
        hist.push(y);
    }
    EegRecording::new(n, rate, out, "sim").expect("simulated data is finite")
}

/// Random VAR(L) whose summed Frobenius norms equal `radius < 1`, which
/// guarantees stability.
pub fn random_stable_var<R: Rng + ?Sized>(channels: usize, order: usize, radius: f64, rng: &mut R) -> VarModel {
    assert!(radius > 0.0 && radius < 1.0);
    let mut coeffs: Vec<DMatrix<f64>> = (0..order)
        .map(|_| DMatrix::from_fn(channels, channels, |_, _| rng.gen_range(-1.0..1.0)))
        .collect();
    let total: f64 = coeffs.iter().map(|c| c.norm()).sum();
    for c in &mut coeffs {
        *c *= radius / total;
    }
    VarModel::from_coeffs(coeffs).expect("finite coefficients")
}

/// Parameters of a two-group synthetic cohort where the positive group has
/// elevated cross-channel coupling.
#[derive(Debug, Clone)]
pub struct SyntheticCohort {
    pub positives: usize,
    pub negatives: usize,
    pub channels: usize,
    pub samples: usize,
    pub rate: f64,
    /// Off-diagonal coupling magnitude for the positive group.
    pub coupling_positive: f64,
    /// Off-diagonal coupling magnitude for the negative group.
    pub coupling_negative: f64,
}

impl Default for SyntheticCohort {
    fn default() -> Self {
        Self {
            positives: 45,
            negatives: 39,
            channels: 16,
            samples: 7680,
            rate: 128.0,
            coupling_positive: 0.3,
            coupling_negative: 0.05,
        }
    }
}

impl SyntheticCohort {
    /// Generating model for one subject: a damped oscillator per channel at a
    /// random theta/alpha frequency, plus directed couplings of the group's
    /// strength from every even channel `j` to `j + 1`, and at half strength
    /// from channel 0 to every fourth channel. Coupling paths are at most two
    /// edges long and acyclic, so stability follows from the diagonal.
    pub fn subject_model<R: Rng + ?Sized>(&self, label: Label, rng: &mut R) -> VarModel {
        let n = self.channels;
        let strength = if label == 0 { self.coupling_positive } else { self.coupling_negative };
        let mut lag1 = DMatrix::zeros(n, n);
        let mut lag2 = DMatrix::zeros(n, n);
        for i in 0..n {
            let freq: f64 = rng.gen_range(6.0..12.0);
            let r: f64 = rng.gen_range(0.55..0.75);
            let theta = 2.0 * std::f64::consts::PI * freq / self.rate;
            lag1[(i, i)] = 2.0 * r * theta.cos();
            lag2[(i, i)] = -r * r;
        }
        for j in (0..n.saturating_sub(1)).step_by(2) {
            lag1[(j + 1, j)] = strength * rng.gen_range(0.8..1.2);
        }
        for i in (4..n).step_by(4) {
            lag1[(i, 0)] = 0.5 * strength * rng.gen_range(0.8..1.2);
        }
        VarModel::from_coeffs(vec![lag1, lag2]).expect("finite coefficients")
    }

    /// Recordings for every subject; positives come first. Subject ids are
    /// `sub001`, `sub002`, ...
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<EegRecording> {
        let total = self.positives + self.negatives;
        (0..total)
            .map(|idx| {
                let label = usize::from(idx >= self.positives);
                let model = self.subject_model(label, rng);
                let mut rec = simulate_var(&model, self.samples, self.rate, rng);
                rec.subject_id = format!("sub{:03}", idx + 1);
                rec.label = Some(label);
                rec
            })
            .collect()
    }
}
