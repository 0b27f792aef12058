//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use connectome::nn::layers::LayerCache;
use connectome::nn::{categorical_cross_entropy, cross_entropy_grad, Classifier, FeatureFusionNet, Mode, Network};
use connectome::Tensor;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---- network measures by brute force ----

/// Random symmetric weights in `(0, 1]` with zero diagonal; each edge is
/// present with probability `density`.
pub fn random_weights(n: usize, density: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < density {
                let v = rng.gen_range(0.01..=1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}

/// Floyd-Warshall over edge lengths `1 / w`.
pub fn oracle_paths(w: &DMatrix<f64>) -> DMatrix<f64> {
    let n = w.nrows();
    let mut d = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else if w[(i, j)] > 0.0 {
            1.0 / w[(i, j)]
        } else {
            f64::INFINITY
        }
    });
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

pub fn oracle_efficiency(w: &DMatrix<f64>) -> f64 {
    let n = w.nrows();
    let d = oracle_paths(w);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && d[(i, j)].is_finite() {
                total += 1.0 / d[(i, j)];
            }
        }
    }
    total / (n * (n - 1)) as f64
}

/// Triangle intensity by enumerating each unordered neighbour pair once.
pub fn oracle_triangles(w: &DMatrix<f64>) -> Vec<f64> {
    let n = w.nrows();
    (0..n)
        .map(|i| {
            let mut t = 0.0;
            for j in 0..n {
                for h in j + 1..n {
                    if j != i && h != i {
                        t += (w[(i, j)] * w[(i, h)] * w[(j, h)]).cbrt();
                    }
                }
            }
            t
        })
        .collect()
}

fn binary_degree(w: &DMatrix<f64>, i: usize) -> usize {
    (0..w.ncols()).filter(|&j| w[(i, j)] > 0.0).count()
}

pub fn oracle_clustering(w: &DMatrix<f64>) -> Vec<f64> {
    let t = oracle_triangles(w);
    (0..w.nrows())
        .map(|i| {
            let k = binary_degree(w, i) as f64;
            if k < 2.0 {
                0.0
            } else {
                2.0 * t[i] / (k * (k - 1.0))
            }
        })
        .collect()
}

pub fn oracle_transitivity(w: &DMatrix<f64>) -> f64 {
    let t: f64 = oracle_triangles(w).iter().sum();
    let denom: f64 = (0..w.nrows())
        .map(|i| {
            let k = binary_degree(w, i) as f64;
            k * (k - 1.0).max(0.0)
        })
        .sum();
    if denom == 0.0 {
        0.0
    } else {
        2.0 * t / denom
    }
}

// ---- finite-difference gradient checks ----

pub const FD_STEP: f64 = 1e-5;

/// `|a - n| / max(|a| + |n|, floor)`; the floor keeps gradients that are
/// zero up to rounding from dominating.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-6)
}

/// Loss with a dropout mask fixed by `mask_seed`.
pub fn masked_loss<C: Classifier>(model: &C, inputs: &[&Tensor], target: usize, mask_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let (p, _) = model.forward(inputs, &mut Mode::Train(&mut rng)).unwrap();
    categorical_cross_entropy(&p, target)
}

/// Every ReLU on/off decision and max-pool winner of `net` on `x`. Finite
/// differences are only meaningful where a perturbation leaves this
/// pattern unchanged.
pub fn network_pattern(net: &Network, x: &Tensor) -> Vec<usize> {
    let (_, cache) = net.forward::<ChaCha8Rng>(x, &mut Mode::Eval).unwrap();
    let mut out = Vec::new();
    for c in cache {
        match c {
            LayerCache::Relu { mask } => out.extend(mask.into_iter().map(usize::from)),
            LayerCache::Pool2d { argmax, .. } => out.extend(argmax),
            _ => {}
        }
    }
    out
}

pub fn fusion_pattern(net: &FeatureFusionNet, xs: &[&Tensor]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut concat = Vec::new();
    for (b, x) in net.branches.iter().zip(xs) {
        out.extend(network_pattern(b, x));
        concat.extend_from_slice(b.predict(x).unwrap().data());
    }
    out.extend(network_pattern(&net.head, &Tensor::from_vec(concat)));
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GradCheck {
    pub worst: f64,
    pub checked: usize,
    /// Coordinates whose perturbation crossed a ReLU or max-pool kink.
    pub skipped: usize,
}

impl GradCheck {
    pub fn merge(self, other: GradCheck) -> GradCheck {
        GradCheck {
            worst: self.worst.max(other.worst),
            checked: self.checked + other.checked,
            skipped: self.skipped + other.skipped,
        }
    }

    /// Passes when the error is below `tol` and kinks left most coordinates checkable.
    pub fn passes(&self, tol: f64) -> bool {
        self.worst < tol && self.checked > 0 && self.skipped * 4 <= self.checked + self.skipped
    }
}

/// Compares analytic parameter gradients against central differences on
/// `per_tensor` sampled coordinates of every parameter tensor.
pub fn check_param_gradients<C: Classifier>(
    model: &C,
    inputs: &[&Tensor],
    target: usize,
    per_tensor: usize,
    seed: u64,
    pattern: impl Fn(&C) -> Vec<usize>,
) -> GradCheck {
    let mask_seed = seed ^ 0x5eed;
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let (_, grads) = model.loss_and_grad(inputs, target, &mut Mode::Train(&mut rng)).unwrap();
    let base = pattern(model);
    let mut pick = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut result = GradCheck::default();
    let sizes: Vec<usize> = model.params().iter().map(|p| p.len()).collect();
    for (t, &len) in sizes.iter().enumerate() {
        let coords: Vec<usize> =
            if len <= per_tensor { (0..len).collect() } else { (0..per_tensor).map(|_| pick.gen_range(0..len)).collect() };
        for k in coords {
            let orig = probe.params()[t][k];
            probe.params_mut()[t][k] = orig + FD_STEP;
            let up = masked_loss(&probe, inputs, target, mask_seed);
            let kink_up = pattern(&probe) != base;
            probe.params_mut()[t][k] = orig - FD_STEP;
            let down = masked_loss(&probe, inputs, target, mask_seed);
            let kink_down = pattern(&probe) != base;
            probe.params_mut()[t][k] = orig;
            if kink_up || kink_down {
                result.skipped += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * FD_STEP);
            result.worst = result.worst.max(rel_error(grads.0[t][k], numeric));
            result.checked += 1;
        }
    }
    result
}

/// Input-gradient counterpart of [`check_param_gradients`] for one network.
pub fn check_input_gradient(net: &Network, x: &Tensor, target: usize, samples: usize, seed: u64) -> GradCheck {
    let mask_seed = seed ^ 0x1a7;
    let mut rng = ChaCha8Rng::seed_from_u64(mask_seed);
    let (y, cache) = net.forward(x, &mut Mode::Train(&mut rng)).unwrap();
    let g = cross_entropy_grad(y.data(), target);
    let (dx, _) = net.backward(&cache, Tensor::from_vec(g)).unwrap();
    let base = network_pattern(net, x);
    let mut pick = ChaCha8Rng::seed_from_u64(seed);
    let mut result = GradCheck::default();
    for _ in 0..samples.min(x.len()) {
        let k = pick.gen_range(0..x.len());
        let mut xp = x.clone();
        xp.data_mut()[k] += FD_STEP;
        let up = masked_loss(net, &[&xp], target, mask_seed);
        let kink_up = network_pattern(net, &xp) != base;
        xp.data_mut()[k] -= 2.0 * FD_STEP;
        let down = masked_loss(net, &[&xp], target, mask_seed);
        let kink_down = network_pattern(net, &xp) != base;
        if kink_up || kink_down {
            result.skipped += 1;
            continue;
        }
        result.worst = result.worst.max(rel_error(dx.data()[k], (up - down) / (2.0 * FD_STEP)));
        result.checked += 1;
    }
    result
}

pub fn random_tensor(shape: Vec<usize>, rng: &mut impl Rng) -> Tensor {
    let len = shape.iter().product();
    Tensor::new(shape, (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}
