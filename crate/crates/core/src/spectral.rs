//! VAR transfer matrix, partial directed coherence, and band aggregation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tensor::Tensor;
use crate::var_model::VarModel;

/// Default spacing of the band-averaging frequency grid, in Hz.
pub const DEFAULT_GRID_STEP: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub name: String,
    /// Inclusive lower edge, Hz.
    pub lo: f64,
    /// Exclusive upper edge, Hz.
    pub hi: f64,
}

impl Band {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), lo, hi }
    }

    /// Uniform grid `lo, lo + step, ...` strictly below `hi`.
    pub fn grid(&self, step: f64) -> Vec<f64> {
        (0..)
            .map(|k| self.lo + k as f64 * step)
            .take_while(|f| *f < self.hi)
            .collect()
    }
}

/// Ordered, non-overlapping half-open frequency bands.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    bands: Vec<Band>,
}

impl Default for BandSpec {
    /// delta [1,4), theta [4,8), alpha [8,14), beta [14,30), gamma [30,64).
    fn default() -> Self {
        Self {
            bands: vec![
                Band::new("delta", 1.0, 4.0),
                Band::new("theta", 4.0, 8.0),
                Band::new("alpha", 8.0, 14.0),
                Band::new("beta", 14.0, 30.0),
                Band::new("gamma", 30.0, 64.0),
            ],
        }
    }
}

impl BandSpec {
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        if bands.is_empty() {
            return Err(Error::validation("band spec is empty"));
        }
        for b in &bands {
            if !(b.lo >= 0.0 && b.lo < b.hi && b.hi.is_finite()) {
                return Err(Error::validation(format!(
                    "band {} has invalid edges [{}, {})",
                    b.name, b.lo, b.hi
                )));
            }
        }
        for (i, a) in bands.iter().enumerate() {
            for b in &bands[i + 1..] {
                if a.lo < b.hi && b.lo < a.hi {
                    return Err(Error::validation(format!("bands {} and {} overlap", a.name, b.name)));
                }
            }
        }
        Ok(Self { bands })
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.bands.iter().map(|b| b.name.as_str()).collect()
    }

    pub fn check_nyquist(&self, rate: f64) -> Result<()> {
        match self.bands.iter().find(|b| b.hi > rate / 2.0) {
            Some(b) => Err(Error::validation(format!(
                "band {} upper edge {} Hz exceeds Nyquist {} Hz",
                b.name,
                b.hi,
                rate / 2.0
            ))),
            None => Ok(()),
        }
    }

    /// Keeps the named bands, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<(BandSpec, Vec<usize>)> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            let i = self
                .bands
                .iter()
                .position(|b| b.name == *name)
                .ok_or_else(|| Error::Config(format!("unknown band {name:?}")))?;
            idx.push(i);
        }
        let spec = BandSpec::new(idx.iter().map(|&i| self.bands[i].clone()).collect())?;
        Ok((spec, idx))
    }
}

/// `Phi(f) = I - sum_l Phi(l) exp(-i 2 pi l f / fs)`, evaluated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub freq: f64,
    pub matrix: DMatrix<Complex64>,
}

pub fn transfer_at(model: &VarModel, freq: f64, rate: f64) -> TransferMatrix {
    let n = model.channels();
    let mut matrix = DMatrix::<Complex64>::identity(n, n);
    for (l, coeff) in model.coeffs().iter().enumerate() {
        let lag = (l + 1) as f64;
        let phase = Complex64::from_polar(1.0, -2.0 * PI * lag * freq / rate);
        for j in 0..n {
            for i in 0..n {
                matrix[(i, j)] -= phase * coeff[(i, j)];
            }
        }
    }
    TransferMatrix { freq, matrix }
}

/// Column-normalized PDC magnitudes `pi_ij(f)`.
pub fn pdc_at(model: &VarModel, freq: f64, rate: f64) -> Result<DMatrix<f64>> {
    let tm = transfer_at(model, freq, rate).matrix;
    let n = tm.nrows();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let col_norm = (0..n).map(|k| tm[(k, j)].norm_sqr()).sum::<f64>().sqrt();
        if !(col_norm > 0.0) {
            return Err(Error::DegenerateColumn { column: j, freq });
        }
        for i in 0..n {
            out[(i, j)] = tm[(i, j)].norm() / col_norm;
        }
    }
    Ok(out)
}

/// Band-limited PDC, `N x N x B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdcTensor {
    pub values: Tensor,
    pub bands: BandSpec,
    pub self_excluded: bool,
}

impl PdcTensor {
    pub fn channels(&self) -> usize {
        self.values.shape()[0]
    }

    /// `N x N` slice for band index `b`.
    pub fn band_slice(&self, b: usize) -> DMatrix<f64> {
        let n = self.channels();
        DMatrix::from_fn(n, n, |i, j| self.values.get(&[i, j, b]))
    }
}

/// Averages `pi_ij(f)` over each band's grid; with `exclude_self` the
/// diagonal is zeroed after averaging.
pub fn band_pdc(
    model: &VarModel,
    rate: f64,
    bands: &BandSpec,
    grid_step: f64,
    exclude_self: bool,
) -> Result<PdcTensor> {
    if !(grid_step > 0.0) {
        return Err(Error::validation(format!("grid step must be positive, got {grid_step}")));
    }
    bands.check_nyquist(rate)?;
    let n = model.channels();
    let nb = bands.len();
    let mut values = Tensor::zeros(vec![n, n, nb]);
    for (b, band) in bands.bands().iter().enumerate() {
        let grid = band.grid(grid_step);
        if grid.is_empty() {
            return Err(Error::EmptyGrid { band: band.name.clone() });
        }
        let mut acc = DMatrix::<f64>::zeros(n, n);
        for f in &grid {
            acc += pdc_at(model, *f, rate)?;
        }
        acc /= grid.len() as f64;
        for i in 0..n {
            for j in 0..n {
                let v = if exclude_self && i == j { 0.0 } else { acc[(i, j)] };
                values.set(&[i, j, b], v);
            }
        }
    }
    Ok(PdcTensor { values, bands: bands.clone(), self_excluded: exclude_self })
}
