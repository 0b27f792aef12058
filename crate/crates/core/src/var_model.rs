//! Least-squares VAR(L) estimation and BIC order selection.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::eeg_io::EegRecording;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Condition-number ceiling for the column-scaled normal equations.
pub const MAX_CONDITION: f64 = 1e12;

/// Lagged regression `Y = X beta + E` for a VAR(L) model.
///
/// Row `r` of `x` holds `[y'_{t-1}, y'_{t-2}, ..., y'_{t-L}]` for `t = L + r`
/// (0-based), and the matching row of `y` holds `y'_t`.
#[derive(Debug, Clone)]
pub struct RegressionDesign {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    order: usize,
    channels: usize,
    /// `coeffs[l]` is the coefficient matrix for lag `l + 1`; entry `(i, j)`
    /// multiplies `y_{j, t-l-1}` in the prediction of `y_{i, t}`.
    coeffs: Vec<DMatrix<f64>>,
    noise_cov: DMatrix<f64>,
}

impl VarModel {
    pub fn new(coeffs: Vec<DMatrix<f64>>, noise_cov: DMatrix<f64>) -> Result<Self> {
        let order = coeffs.len();
        if order == 0 {
            return Err(Error::validation("VAR model needs at least one lag"));
        }
        let n = coeffs[0].nrows();
        if coeffs.iter().any(|c| c.nrows() != n || c.ncols() != n) {
            return Err(Error::shape("all coefficient matrices must be N x N"));
        }
        if noise_cov.nrows() != n || noise_cov.ncols() != n {
            return Err(Error::shape("noise covariance must be N x N"));
        }
        if coeffs.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(Error::validation("non-finite VAR coefficient"));
        }
        Ok(Self { order, channels: n, coeffs, noise_cov })
    }

    /// Model with the given coefficients and identity noise covariance.
    pub fn from_coeffs(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = coeffs.first().map(|c| c.nrows()).unwrap_or(0);
        Self::new(coeffs, DMatrix::identity(n, n))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Coefficient matrix for lag `lag` (1-based).
    pub fn coeff(&self, lag: usize) -> &DMatrix<f64> {
        &self.coeffs[lag - 1]
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn noise_cov(&self) -> &DMatrix<f64> {
        &self.noise_cov
    }

    /// Largest absolute coefficient difference against another model of the same shape.
    pub fn max_abs_diff(&self, other: &VarModel) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

pub fn build_design(rec: &EegRecording, order: usize) -> Result<RegressionDesign> {
    let n = rec.channels();
    let t_len = rec.samples();
    if order == 0 {
        return Err(Error::validation("model order must be at least 1"));
    }
    if t_len <= order {
        return Err(Error::InsufficientSamples(format!(
            "order {order} needs more than {order} samples, got {t_len}"
        )));
    }
    let rows = t_len - order;
    let mut x = DMatrix::zeros(rows, n * order);
    let mut y = DMatrix::zeros(rows, n);
    for r in 0..rows {
        let t = order + r;
        for ch in 0..n {
            y[(r, ch)] = rec.get(t, ch);
        }
        for lag in 1..=order {
            let past = rec.sample(t - lag);
            for ch in 0..n {
                x[(r, (lag - 1) * n + ch)] = past[ch];
            }
        }
    }
    Ok(RegressionDesign { x, y, order })
}

/// Solves the normal equations for the stacked coefficients `beta`
/// (`(N L) x N`) with column equilibration and a Cholesky factorization.
fn solve_normal_equations(design: &RegressionDesign) -> Result<DMatrix<f64>> {
    let x = &design.x;
    let cols = x.ncols();
    let scale: Vec<f64> = (0..cols)
        .map(|c| {
            let norm = x.column(c).norm();
            if norm > 0.0 {
                1.0 / norm
            } else {
                1.0
            }
        })
        .collect();
    let mut xs = x.clone();
    for (c, s) in scale.iter().enumerate() {
        xs.column_mut(c).scale_mut(*s);
    }
    let gram = xs.tr_mul(&xs);
    let eig = SymmetricEigen::new(gram.clone());
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    let condition = if min_ev > 0.0 { max_ev / min_ev } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::SingularDesign { condition, limit: MAX_CONDITION });
    }
    let chol = gram
        .cholesky()
        .ok_or(Error::SingularDesign { condition, limit: MAX_CONDITION })?;
    let rhs = xs.tr_mul(&design.y);
    let mut beta = chol.solve(&rhs);
    for (r, s) in scale.iter().enumerate() {
        beta.row_mut(r).scale_mut(*s);
    }
    Ok(beta)
}

fn unstack(beta: &DMatrix<f64>, n: usize, order: usize) -> Vec<DMatrix<f64>> {
    (0..order)
        .map(|l| {
            // beta block rows l*n..(l+1)*n hold Phi(l+1)' .
            DMatrix::from_fn(n, n, |i, j| beta[(l * n + j, i)])
        })
        .collect()
}

pub fn fit_var(rec: &EegRecording, order: usize) -> Result<VarModel> {
    let n = rec.channels();
    let t_len = rec.samples();
    if t_len <= n * order + 1 {
        return Err(Error::InsufficientSamples(format!(
            "VAR({order}) on {n} channels needs at least {} samples, got {t_len}",
            n * order + 2
        )));
    }
    let design = build_design(rec, order)?;
    let beta = solve_normal_equations(&design)?;
    let resid = &design.y - &design.x * &beta;
    let mut cov = resid.tr_mul(&resid) / (t_len - order) as f64;
    // Symmetrize away rounding asymmetry.
    let cov_t = cov.transpose();
    cov = (cov + cov_t) * 0.5;
    VarModel::new(unstack(&beta, n, order), cov)
}

/// Stacked `beta` of a fitted model, in the layout of [`RegressionDesign`].
pub fn stacked_coefficients(model: &VarModel) -> DMatrix<f64> {
    let n = model.channels();
    DMatrix::from_fn(n * model.order(), n, |r, i| {
        let (l, j) = (r / n, r % n);
        model.coeffs()[l][(i, j)]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicSelection {
    pub order: usize,
    /// `scores[l - 1]` is BIC(l); unusable candidates score `+inf`.
    pub scores: Vec<f64>,
    /// Candidate orders scored `+inf` (singular design or non-positive-definite covariance).
    pub flagged: Vec<usize>,
}

/// `ln det` of a symmetric matrix, or `None` when it is not positive definite.
fn ln_det_spd(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l();
    let mut acc = 0.0;
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d > 0.0) {
            return None;
        }
        acc += 2.0 * d.ln();
    }
    acc.is_finite().then_some(acc)
}

/// Selects the VAR order minimizing
/// `ln det(Sigma_L) + L N^2 ln(T - L) / (T - L)`; ties go to the smaller order.
pub fn bic_order_select(rec: &EegRecording, max_order: usize) -> Result<BicSelection> {
    if max_order == 0 {
        return Err(Error::validation("max_order must be at least 1"));
    }
    let n = rec.channels();
    let t_len = rec.samples();
    if t_len <= n * max_order + 1 {
        return Err(Error::InsufficientSamples(format!(
            "BIC up to order {max_order} on {n} channels needs at least {} samples, got {t_len}",
            n * max_order + 2
        )));
    }
    let mut scores = Vec::with_capacity(max_order);
    let mut flagged = Vec::new();
    for order in 1..=max_order {
        let eff = (t_len - order) as f64;
        let score = fit_var(rec, order)
            .ok()
            .and_then(|m| ln_det_spd(m.noise_cov()))
            .map(|ld| ld + (order * n * n) as f64 * eff.ln() / eff);
        match score {
            Some(s) => scores.push(s),
            None => {
                flagged.push(order);
                scores.push(f64::INFINITY);
            }
        }
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(BicSelection { order: best + 1, scores, flagged })
}

/// `N x N x L` tensor with `[i, j, l] = phi_ij(l + 1)`.
pub fn var_feature_tensor(model: &VarModel) -> Tensor {
    let n = model.channels();
    let order = model.order();
    let mut data = Vec::with_capacity(n * n * order);
    for i in 0..n {
        for j in 0..n {
            for l in 0..order {
                data.push(model.coeffs()[l][(i, j)]);
            }
        }
    }
    Tensor::new(vec![n, n, order], data).expect("consistent shape")
}

/// Inverse of [`var_feature_tensor`]; the noise covariance is set to identity.
pub fn model_from_tensor(t: &Tensor) -> Result<VarModel> {
    let [n, n2, order] = t.shape() else {
        return Err(Error::shape(format!("expected N x N x L tensor, got {}", t.shape_string())));
    };
    if n != n2 {
        return Err(Error::shape("coefficient tensor must be square in its first two axes"));
    }
    let coeffs = (0..*order)
        .map(|l| DMatrix::from_fn(*n, *n, |i, j| t.get(&[i, j, l])))
        .collect();
    VarModel::from_coeffs(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::simulate_var;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rec(n: usize, data: Vec<f64>) -> EegRecording {
        EegRecording::new(n, 1.0, data, "t").unwrap()
    }

    #[test]
    fn design_univariate_by_hand() {
        let r = EegRecording::new(2, 1.0, vec![1., 0., 2., 0., 3., 0., 4., 0.], "t").unwrap();
        let d = build_design(&r, 1).unwrap();
        assert_eq!(d.x.column(0).iter().copied().collect::<Vec<_>>(), vec![1., 2., 3.]);
        assert_eq!(d.y.column(0).iter().copied().collect::<Vec<_>>(), vec![2., 3., 4.]);
    }

    #[test]
    fn design_lag_blocks_ordered() {
        // y1 = (1, 2), y2 = (3, 4), y3 = (5, 6)
        let d = build_design(&rec(2, vec![1., 2., 3., 4., 5., 6.]), 2).unwrap();
        assert_eq!(d.x.nrows(), 1);
        assert_eq!(d.x.row(0).iter().copied().collect::<Vec<_>>(), vec![3., 4., 1., 2.]);
        assert_eq!(d.y.row(0).iter().copied().collect::<Vec<_>>(), vec![5., 6.]);
    }

    #[test]
    fn too_few_samples() {
        // T = L: no regression rows at all.
        assert!(matches!(
            build_design(&rec(2, vec![1., 2., 3., 4.]), 2),
            Err(Error::InsufficientSamples(_))
        ));
        // T = N L: rows exist but fewer than regressors.
        let r = rec(2, (0..8).map(f64::from).collect());
        assert!(matches!(fit_var(&r, 4), Err(Error::InsufficientSamples(_))));
    }

    #[test]
    fn constant_zero_channel_is_singular() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sim = simulate_var(
            &VarModel::from_coeffs(vec![DMatrix::from_row_slice(2, 2, &[0.3, 0.0, 0.0, 0.3])]).unwrap(),
            500,
            1.0,
            &mut rng,
        );
        let data: Vec<f64> = sim.data().chunks(2).flat_map(|s| [s[0], 0.0]).collect();
        let r = rec(2, data);
        assert!(matches!(fit_var(&r, 1), Err(Error::SingularDesign { .. })));
    }

    #[test]
    fn recovers_var1() {
        let truth = VarModel::from_coeffs(vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.4])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = simulate_var(&truth, 4000, 1.0, &mut rng);
        let fit = fit_var(&r, 1).unwrap();
        assert!(fit.max_abs_diff(&truth) < 0.05, "{}", fit.max_abs_diff(&truth));
    }

    #[test]
    fn white_noise_coefficients_small() {
        let truth = VarModel::from_coeffs(vec![DMatrix::zeros(2, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = simulate_var(&truth, 8000, 1.0, &mut rng);
        let fit = fit_var(&r, 1).unwrap();
        assert!(fit.coeff(1).amax() < 0.05);
    }

    #[test]
    fn residuals_orthogonal_to_scaled_design() {
        let truth = VarModel::from_coeffs(vec![
            DMatrix::from_row_slice(3, 3, &[0.4, 0.1, 0.0, 0.0, 0.3, 0.2, 0.1, 0.0, 0.2]),
            DMatrix::from_row_slice(3, 3, &[-0.2, 0.0, 0.0, 0.1, -0.1, 0.0, 0.0, 0.0, 0.1]),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = simulate_var(&truth, 3000, 1.0, &mut rng);
        let fit = fit_var(&r, 2).unwrap();
        let d = build_design(&r, 2).unwrap();
        let resid = &d.y - &d.x * stacked_coefficients(&fit);
        let mut xs = d.x.clone();
        for c in 0..xs.ncols() {
            let norm = xs.column(c).norm();
            xs.column_mut(c).scale_mut(1.0 / norm);
        }
        assert!(xs.tr_mul(&resid).amax() < 1e-6);
    }

    #[test]
    fn noise_cov_symmetric_psd() {
        let truth = VarModel::from_coeffs(vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.2])]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = simulate_var(&truth, 1000, 1.0, &mut rng);
        let fit = fit_var(&r, 3).unwrap();
        let cov = fit.noise_cov();
        assert!((cov - cov.transpose()).amax() < 1e-10);
        let ev = SymmetricEigen::new(cov.clone()).eigenvalues;
        assert!(ev.min() >= -1e-8);
    }

    #[test]
    fn bic_white_noise_picks_one() {
        let truth = VarModel::from_coeffs(vec![DMatrix::zeros(2, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = simulate_var(&truth, 4000, 1.0, &mut rng);
        let sel = bic_order_select(&r, 10).unwrap();
        assert_eq!(sel.order, 1);
        assert_eq!(sel.scores.len(), 10);
        assert!(sel.flagged.is_empty());
    }

    #[test]
    fn bic_recovers_order_three() {
        let mut third = DMatrix::zeros(3, 3);
        third[(0, 1)] = 0.5;
        third[(1, 2)] = -0.4;
        third[(2, 0)] = 0.45;
        let truth = VarModel::from_coeffs(vec![
            DMatrix::from_diagonal_element(3, 3, 0.2),
            DMatrix::zeros(3, 3),
            third,
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = simulate_var(&truth, 8000, 1.0, &mut rng);
        assert_eq!(bic_order_select(&r, 6).unwrap().order, 3);
    }

    #[test]
    fn bic_flags_unusable_orders() {
        // A channel that is an exact copy of another makes every design singular.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = simulate_var(
            &VarModel::from_coeffs(vec![DMatrix::from_diagonal_element(2, 2, 0.3)]).unwrap(),
            400,
            1.0,
            &mut rng,
        );
        let data: Vec<f64> = base.data().chunks(2).flat_map(|s| [s[0], s[0]]).collect();
        let sel = bic_order_select(&rec(2, data), 3).unwrap();
        assert_eq!(sel.flagged, vec![1, 2, 3]);
        assert!(sel.scores.iter().all(|s| s.is_infinite()));
        assert_eq!(sel.order, 1);
    }

    #[test]
    fn feature_tensor_layout() {
        let m = VarModel::from_coeffs(vec![DMatrix::identity(3, 3)]).unwrap();
        let t = var_feature_tensor(&m);
        assert_eq!(t.shape(), &[3, 3, 1]);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(t.get(&[i, j, 0]), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn feature_tensor_round_trip() {
        let coeffs = (0..5)
            .map(|l| DMatrix::from_fn(16, 16, |i, j| (i * 31 + j * 7 + l) as f64 * 1e-3))
            .collect();
        let m = VarModel::from_coeffs(coeffs).unwrap();
        let t = var_feature_tensor(&m);
        assert_eq!(t.shape(), &[16, 16, 5]);
        let back = model_from_tensor(&t).unwrap();
        assert_eq!(var_feature_tensor(&back), t);
    }
}
