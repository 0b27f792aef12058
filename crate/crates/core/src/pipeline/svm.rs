//! Linear SVM baseline trained by deterministic full-batch subgradient
//! descent on the L2-regularized hinge loss.

use crate::binfmt::{BinReader, BinWriter};
use crate::eeg_io::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    /// Regularization strength `lambda` in `lambda/2 |w|^2 + mean hinge`.
    pub lambda: f64,
    pub iterations: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { lambda: 1e-2, iterations: 2000 }
    }
}

/// Label 0 is the `+1` side of the decision function.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub mean: Vec<f64>,
    pub inv_sd: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub majority: Label,
}

fn sign(label: Label) -> f64 {
    if label == 0 {
        1.0
    } else {
        -1.0
    }
}

impl LinearSvm {
    fn standardized(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.inv_sd).map(|((v, m), s)| (v - m) * s).collect()
    }

    pub fn dims(&self) -> usize {
        self.weights.len()
    }

    /// Signed distance-like score; positive means label 0.
    pub fn decision(&self, x: &[f64]) -> f64 {
        let z = self.standardized(x);
        self.bias + z.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        let d = self.decision(x);
        if d > 0.0 {
            0
        } else if d < 0.0 {
            1
        } else {
            self.majority
        }
    }

    /// Smallest `y (w.z + b) / |w|` over the given points, in standardized
    /// coordinates.
    pub fn geometric_margin(&self, xs: &[Vec<f64>], labels: &[Label]) -> f64 {
        let norm = self.weights.iter().map(|w| w * w).sum::<f64>().sqrt();
        xs.iter()
            .zip(labels)
            .map(|(x, &l)| sign(l) * self.decision(x) / norm)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write(&self, w: &mut BinWriter) {
        w.f64s(&self.mean);
        w.f64s(&self.inv_sd);
        w.f64s(&self.weights);
        w.f64(self.bias);
        w.u8(self.majority as u8);
    }

    pub fn read(r: &mut BinReader<'_>) -> Result<Self> {
        let mean = r.f64s()?;
        let inv_sd = r.f64s()?;
        let weights = r.f64s()?;
        let bias = r.f64()?;
        let majority = r.u8()? as Label;
        if mean.len() != weights.len() || inv_sd.len() != weights.len() || majority > 1 {
            return Err(Error::format("inconsistent SVM parameters"));
        }
        Ok(Self { mean, inv_sd, weights, bias, majority })
    }
}

/// Fits a linear SVM on standardized features. Step size at iteration `t`
/// (1-based) is `1 / (lambda t)`; the returned weights average the second
/// half of the iterates.
pub fn train_svm(features: &[Vec<f64>], labels: &[Label], params: &SvmParams) -> Result<LinearSvm> {
    if features.len() != labels.len() {
        return Err(Error::shape(format!("{} feature rows for {} labels", features.len(), labels.len())));
    }
    let counts = [labels.iter().filter(|&&l| l == 0).count(), labels.iter().filter(|&&l| l == 1).count()];
    if counts[0] == 0 || counts[1] == 0 || counts[0] + counts[1] != labels.len() {
        return Err(Error::validation("SVM training needs examples of both classes"));
    }
    if !(params.lambda > 0.0) {
        return Err(Error::validation(format!("SVM lambda must be positive, got {}", params.lambda)));
    }
    let d = features[0].len();
    if features.iter().any(|x| x.len() != d) {
        return Err(Error::shape("SVM feature rows differ in length"));
    }
    let n = features.len() as f64;
    let majority = usize::from(counts[1] > counts[0]);
    let mut mean = vec![0.0; d];
    for x in features {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut inv_sd = vec![0.0; d];
    for x in features {
        for ((s, v), m) in inv_sd.iter_mut().zip(x).zip(&mean) {
            *s += (v - m).powi(2) / n;
        }
    }
    inv_sd.iter_mut().for_each(|s| *s = if s.sqrt() > 1e-12 { 1.0 / s.sqrt() } else { 0.0 });

    let z: Vec<Vec<f64>> = features
        .iter()
        .map(|x| x.iter().zip(&mean).zip(&inv_sd).map(|((v, m), s)| (v - m) * s).collect())
        .collect();
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; d];
    let mut b_avg = 0.0;
    let start = params.iterations / 2;
    for t in 1..=params.iterations {
        let eta = 1.0 / (params.lambda * t as f64);
        let mut gw: Vec<f64> = w.iter().map(|wi| params.lambda * wi).collect();
        let mut gb = 0.0;
        for (zi, &yi) in z.iter().zip(&y) {
            let margin = yi * (b + zi.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>());
            if margin < 1.0 {
                for (g, v) in gw.iter_mut().zip(zi) {
                    *g -= yi * v / n;
                }
                gb -= yi / n;
            }
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= eta * g;
        }
        b -= eta * gb;
        // Project onto the ball that contains the optimum.
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let radius = 1.0 / params.lambda.sqrt();
        if norm > radius {
            w.iter_mut().for_each(|v| *v *= radius / norm);
        }
        if t > start {
            for (a, v) in w_avg.iter_mut().zip(&w) {
                *a += v;
            }
            b_avg += b;
        }
    }
    let count = (params.iterations - start).max(1) as f64;
    w_avg.iter_mut().for_each(|v| *v /= count);
    b_avg /= count;
    if params.iterations == 0 {
        w_avg = w;
        b_avg = b;
    }
    Ok(LinearSvm { mean, inv_sd, weights: w_avg, bias: b_avg, majority })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<Label>) {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..20 {
            xs.push(vec![0.0, 0.0]);
            ys.push(1);
            xs.push(vec![1.0, 1.0]);
            ys.push(0);
        }
        (xs, ys)
    }

    #[test]
    fn separates_toy_set() {
        let (xs, ys) = toy();
        let svm = train_svm(&xs, &ys, &SvmParams::default()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(svm.predict(x), *y);
        }
    }

    #[test]
    fn constant_features_fall_back_to_majority() {
        let xs = vec![vec![2.0, 2.0]; 5];
        let ys = vec![1, 1, 1, 0, 0];
        let svm = train_svm(&xs, &ys, &SvmParams::default()).unwrap();
        assert_eq!(svm.predict(&[2.0, 2.0]), 1);
        assert_eq!(svm.predict(&[9.0, -3.0]), 1);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(train_svm(&[vec![1.0], vec![2.0]], &[0, 0], &SvmParams::default()).is_err());
    }
}
