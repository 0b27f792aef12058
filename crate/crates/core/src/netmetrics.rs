//! Weighted undirected network measures: strength, global efficiency,
//! clustering coefficient, and transitivity.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spectral::{BandSpec, PdcTensor};
use crate::tensor::Tensor;

/// Symmetric, nonnegative weight matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    weights: DMatrix<f64>,
}

impl WeightedNetwork {
    /// Validates an already-symmetric weight matrix.
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::shape("weight matrix must be square"));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::validation(format!("nonzero self-weight at node {i}")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Error::validation(format!("invalid weight {w} at ({i}, {j})")));
                }
                if (w - weights[(j, i)]).abs() > 1e-12 {
                    return Err(Error::validation(format!("asymmetric weight at ({i}, {j})")));
                }
            }
        }
        Ok(Self { weights })
    }

    pub fn nodes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Number of neighbours with positive weight.
    pub fn binary_degree(&self, i: usize) -> usize {
        self.weights.row(i).iter().filter(|&&w| w > 0.0).count()
    }
}

/// `W = (P + P') / 2` with the diagonal forced to zero.
pub fn symmetrize(slice: &DMatrix<f64>) -> Result<WeightedNetwork> {
    let n = slice.nrows();
    if slice.ncols() != n {
        return Err(Error::shape("connectivity slice must be square"));
    }
    if let Some(v) = slice.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::validation(format!("connectivity weights must be nonnegative, found {v}")));
    }
    let mut w = (slice + slice.transpose()) * 0.5;
    w.fill_diagonal(0.0);
    WeightedNetwork::new(w)
}

/// Node strengths `k_i = sum_j w_ij`.
pub fn degrees(net: &WeightedNetwork) -> Vec<f64> {
    (0..net.nodes()).map(|i| net.weights.row(i).sum()).collect()
}

/// All-pairs shortest path lengths with edge length `1 / w`; unreachable
/// pairs are `+inf`. Dense Dijkstra from every source.
pub fn shortest_paths(net: &WeightedNetwork) -> DMatrix<f64> {
    let n = net.nodes();
    let mut dist = DMatrix::from_element(n, n, f64::INFINITY);
    let mut done = vec![false; n];
    for s in 0..n {
        done.iter_mut().for_each(|d| *d = false);
        let mut row = vec![f64::INFINITY; n];
        row[s] = 0.0;
        for _ in 0..n {
            let Some(u) = (0..n)
                .filter(|&v| !done[v] && row[v].is_finite())
                .min_by(|&a, &b| row[a].total_cmp(&row[b]))
            else {
                break;
            };
            done[u] = true;
            for v in 0..n {
                let w = net.weights[(u, v)];
                if w > 0.0 && !done[v] {
                    let cand = row[u] + 1.0 / w;
                    if cand < row[v] {
                        row[v] = cand;
                    }
                }
            }
        }
        for (t, d) in row.into_iter().enumerate() {
            dist[(s, t)] = d;
        }
    }
    dist
}

/// `E = (1/N) sum_i sum_{j != i} d_ij^-1 / (N - 1)`; unreachable pairs add 0.
pub fn global_efficiency(net: &WeightedNetwork) -> f64 {
    efficiency_from_distances(&shortest_paths(net))
}

pub(crate) fn efficiency_from_distances(dist: &DMatrix<f64>) -> f64 {
    let n = dist.nrows();
    if n < 2 {
        return 0.0;
    }
    let total: f64 = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = dist[(i, j)];
                    if d.is_finite() && d > 0.0 {
                        1.0 / d
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                / (n - 1) as f64
        })
        .sum();
    total / n as f64
}

/// Weighted triangle intensity `t_i = 0.5 sum_{j,h} (w_ij w_ih w_jh)^(1/3)`.
pub fn triangle_intensity(net: &WeightedNetwork) -> Vec<f64> {
    let n = net.nodes();
    let cube: DMatrix<f64> = net.weights.map(f64::cbrt);
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..n {
                let a = cube[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for h in 0..n {
                    acc += a * cube[(i, h)] * cube[(j, h)];
                }
            }
            0.5 * acc
        })
        .collect()
}

/// Local clustering `C_i = 2 t_i / (k_i (k_i - 1))` with binary degree `k_i`
/// (0 when `k_i < 2`), and the network mean.
pub fn clustering(net: &WeightedNetwork) -> (Vec<f64>, f64) {
    let n = net.nodes();
    let t = triangle_intensity(net);
    let local: Vec<f64> = (0..n)
        .map(|i| {
            let k = net.binary_degree(i);
            if k < 2 {
                0.0
            } else {
                2.0 * t[i] / (k * (k - 1)) as f64
            }
        })
        .collect();
    let mean = if n == 0 { 0.0 } else { local.iter().sum::<f64>() / n as f64 };
    (local, mean)
}

/// `T = sum 2 t_i / sum k_i (k_i - 1)`, or 0 when no node has two neighbours.
pub fn transitivity(net: &WeightedNetwork) -> f64 {
    let t = triangle_intensity(net);
    let denom: usize = (0..net.nodes())
        .map(|i| {
            let k = net.binary_degree(i);
            k * k.saturating_sub(1)
        })
        .sum();
    if denom == 0 {
        0.0
    } else {
        2.0 * t.iter().sum::<f64>() / denom as f64
    }
}

/// Stacked per-band topology features, shape `(2N + 2) x B`. Each column is
/// `[k_1..k_N, E, C_1..C_N, T]` for one band.
#[derive(Debug, Clone, PartialEq)]
pub struct CnFeatureVector {
    pub values: Tensor,
    pub bands: BandSpec,
}

impl CnFeatureVector {
    pub fn nodes(&self) -> usize {
        (self.values.shape()[0] - 2) / 2
    }

    pub fn band_column(&self, b: usize) -> Vec<f64> {
        let rows = self.values.shape()[0];
        (0..rows).map(|r| self.values.get(&[r, b])).collect()
    }
}

/// Feature column for one network, in the fixed layout.
pub fn network_features(net: &WeightedNetwork) -> Vec<f64> {
    let mut col = degrees(net);
    col.push(global_efficiency(net));
    let (local, _) = clustering(net);
    col.extend(local);
    col.push(transitivity(net));
    col
}

pub fn cn_features(pdc: &PdcTensor) -> Result<CnFeatureVector> {
    let n = pdc.channels();
    let nb = pdc.bands.len();
    let rows = 2 * n + 2;
    let mut values = Tensor::zeros(vec![rows, nb]);
    for b in 0..nb {
        let net = symmetrize(&pdc.band_slice(b))?;
        for (r, v) in network_features(&net).into_iter().enumerate() {
            values.set(&[r, b], v);
        }
    }
    Ok(CnFeatureVector { values, bands: pdc.bands.clone() })
}
