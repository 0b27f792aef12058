//! Training examples and per-element feature normalization.

use crate::binfmt::{BinReader, BinWriter};
use crate::eeg_io::Label;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// One subject's model inputs (one tensor per consumed domain) and label.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub subject_id: String,
    pub inputs: Vec<Tensor>,
    pub label: Label,
}

impl Example {
    pub fn input_refs(&self) -> Vec<&Tensor> {
        self.inputs.iter().collect()
    }
}

/// Element-wise z-scoring with statistics from training tensors only.
/// Elements that are constant in training map to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    shape: Vec<usize>,
    mean: Vec<f64>,
    inv_sd: Vec<f64>,
}

impl Normalizer {
    pub fn fit(tensors: &[&Tensor]) -> Result<Self> {
        let first = tensors.first().ok_or_else(|| Error::validation("normalizer needs at least one tensor"))?;
        let shape = first.shape().to_vec();
        let n = tensors.len() as f64;
        let mut mean = vec![0.0; first.len()];
        for t in tensors {
            if t.shape() != shape.as_slice() {
                return Err(Error::shape(format!(
                    "normalizer fitted on {}, got {}",
                    crate::tensor::shape_string(&shape),
                    t.shape_string()
                )));
            }
            for (m, v) in mean.iter_mut().zip(t.data()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; mean.len()];
        for t in tensors {
            for ((s, v), m) in var.iter_mut().zip(t.data()).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let inv_sd = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    0.0
                }
            })
            .collect();
        Ok(Self { shape, mean, inv_sd })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn apply(&self, t: &Tensor) -> Result<Tensor> {
        if t.shape() != self.shape.as_slice() {
            return Err(Error::shape(format!(
                "normalizer expects {}, got {}",
                crate::tensor::shape_string(&self.shape),
                t.shape_string()
            )));
        }
        let data = t
            .data()
            .iter()
            .zip(&self.mean)
            .zip(&self.inv_sd)
            .map(|((v, m), s)| (v - m) * s)
            .collect();
        Tensor::new(self.shape.clone(), data)
    }

    pub fn write(&self, w: &mut BinWriter) {
        w.dims(&self.shape);
        w.f64s(&self.mean);
        w.f64s(&self.inv_sd);
    }

    pub fn read(r: &mut BinReader<'_>) -> Result<Self> {
        let shape = r.dims()?;
        let mean = r.f64s()?;
        let inv_sd = r.f64s()?;
        let len: usize = shape.iter().product();
        if mean.len() != len || inv_sd.len() != len {
            return Err(Error::format("normalizer statistics do not match its shape"));
        }
        Ok(Self { shape, mean, inv_sd })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardizes_training_set() {
        let a = Tensor::new(vec![2], vec![1.0, 5.0]).unwrap();
        let b = Tensor::new(vec![2], vec![3.0, 5.0]).unwrap();
        let n = Normalizer::fit(&[&a, &b]).unwrap();
        assert_eq!(n.apply(&a).unwrap().data(), &[-1.0, 0.0]);
        assert_eq!(n.apply(&b).unwrap().data(), &[1.0, 0.0]);
        assert!(n.apply(&Tensor::from_vec(vec![1.0; 3])).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let a = Tensor::new(vec![1, 2], vec![0.5, -2.0]).unwrap();
        let b = Tensor::new(vec![1, 2], vec![1.5, 4.0]).unwrap();
        let n = Normalizer::fit(&[&a, &b]).unwrap();
        let mut w = BinWriter::new();
        n.write(&mut w);
        let bytes = w.finish();
        let mut r = BinReader::checked(&bytes).unwrap();
        assert_eq!(Normalizer::read(&mut r).unwrap(), n);
    }
}
