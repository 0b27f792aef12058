//! Probability-output models trained with cross-entropy.

use rand::Rng;

use super::layers::Mode;
use super::network::{Gradients, Network, NetworkCache};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Probabilities are clamped to `[PROB_FLOOR, 1 - PROB_FLOOR]` inside the loss.
pub const PROB_FLOOR: f64 = 1e-12;

/// Binary cross-entropy `-(b ln p + (1 - b) ln(1 - p))`.
pub fn cross_entropy(p: f64, b: bool) -> f64 {
    let p = p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    if b {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Cross-entropy of a probability vector against a one-hot target.
pub fn categorical_cross_entropy(probs: &[f64], target: usize) -> f64 {
    -probs[target].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR).ln()
}

/// Gradient of [`categorical_cross_entropy`] with respect to the probabilities.
pub fn cross_entropy_grad(probs: &[f64], target: usize) -> Vec<f64> {
    let mut g = vec![0.0; probs.len()];
    g[target] = -1.0 / probs[target].clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
    g
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// A trainable model mapping one or more input tensors to class probabilities.
pub trait Classifier: Clone + Send + Sync {
    type Cache: Send;

    fn num_inputs(&self) -> usize;

    fn forward<R: Rng + ?Sized>(
        &self,
        inputs: &[&Tensor],
        mode: &mut Mode<'_, R>,
    ) -> Result<(Vec<f64>, Self::Cache)>;

    /// Parameter gradients given `d loss / d probabilities`.
    fn backward(&self, cache: &Self::Cache, grad_probs: &[f64]) -> Result<Gradients>;

    fn params(&self) -> Vec<&[f64]>;

    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    fn predict_proba(&self, inputs: &[&Tensor]) -> Result<Vec<f64>> {
        self.forward::<rand_chacha::ChaCha8Rng>(inputs, &mut Mode::Eval).map(|(p, _)| p)
    }

    /// Cross-entropy loss and its parameter gradients for one example.
    fn loss_and_grad<R: Rng + ?Sized>(
        &self,
        inputs: &[&Tensor],
        target: usize,
        mode: &mut Mode<'_, R>,
    ) -> Result<(f64, Gradients)> {
        let (probs, cache) = self.forward(inputs, mode)?;
        let loss = categorical_cross_entropy(&probs, target);
        let grads = self.backward(&cache, &cross_entropy_grad(&probs, target))?;
        Ok((loss, grads))
    }
}

impl Classifier for Network {
    type Cache = NetworkCache;

    fn num_inputs(&self) -> usize {
        1
    }

    fn forward<R: Rng + ?Sized>(&self, inputs: &[&Tensor], mode: &mut Mode<'_, R>) -> Result<(Vec<f64>, NetworkCache)> {
        let [x] = inputs else {
            return Err(Error::shape(format!("network takes 1 input, got {}", inputs.len())));
        };
        let (y, cache) = Network::forward(self, x, mode)?;
        Ok((y.into_data(), cache))
    }

    fn backward(&self, cache: &NetworkCache, grad_probs: &[f64]) -> Result<Gradients> {
        Network::backward(self, cache, Tensor::from_vec(grad_probs.to_vec())).map(|(_, g)| g)
    }

    fn params(&self) -> Vec<&[f64]> {
        Network::params(self)
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        Network::params_mut(self)
    }
}

/// Several convolutional branches whose flattened outputs are concatenated
/// and fed to a shared head.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureFusionNet {
    pub branches: Vec<Network>,
    pub head: Network,
}

impl FeatureFusionNet {
    pub fn new(branches: Vec<Network>, head: Network) -> Result<Self> {
        let mut total = 0;
        for (i, b) in branches.iter().enumerate() {
            match b.output_shape() {
                [n] => total += n,
                other => {
                    return Err(Error::shape(format!(
                        "branch {i} must end flat, ends with {}",
                        crate::tensor::shape_string(other)
                    )))
                }
            }
        }
        if head.input_shape() != [total] {
            return Err(Error::shape(format!(
                "head expects {}, branches produce {total}",
                crate::tensor::shape_string(head.input_shape())
            )));
        }
        Ok(Self { branches, head })
    }

    pub fn concat_len(&self) -> usize {
        self.head.input_shape()[0]
    }
}

#[derive(Debug)]
pub struct FusionCache {
    branches: Vec<NetworkCache>,
    widths: Vec<usize>,
    head: NetworkCache,
}

impl Classifier for FeatureFusionNet {
    type Cache = FusionCache;

    fn num_inputs(&self) -> usize {
        self.branches.len()
    }

    fn forward<R: Rng + ?Sized>(&self, inputs: &[&Tensor], mode: &mut Mode<'_, R>) -> Result<(Vec<f64>, FusionCache)> {
        if inputs.len() != self.branches.len() {
            return Err(Error::shape(format!(
                "fusion network takes {} inputs, got {}",
                self.branches.len(),
                inputs.len()
            )));
        }
        let mut concat = Vec::with_capacity(self.concat_len());
        let mut caches = Vec::with_capacity(self.branches.len());
        let mut widths = Vec::with_capacity(self.branches.len());
        for (b, x) in self.branches.iter().zip(inputs) {
            let (y, c) = b.forward(x, mode)?;
            widths.push(y.len());
            concat.extend_from_slice(y.data());
            caches.push(c);
        }
        let (probs, head) = self.head.forward(&Tensor::from_vec(concat), mode)?;
        Ok((probs.into_data(), FusionCache { branches: caches, widths, head }))
    }

    fn backward(&self, cache: &FusionCache, grad_probs: &[f64]) -> Result<Gradients> {
        let (dconcat, head_grads) = self.head.backward(&cache.head, Tensor::from_vec(grad_probs.to_vec()))?;
        let mut all = Vec::new();
        let mut offset = 0;
        for ((b, c), w) in self.branches.iter().zip(&cache.branches).zip(&cache.widths) {
            let g = Tensor::from_vec(dconcat.data()[offset..offset + w].to_vec());
            offset += w;
            let (_, grads) = b.backward(c, g)?;
            all.extend(grads.0);
        }
        all.extend(head_grads.0);
        Ok(Gradients(all))
    }

    fn params(&self) -> Vec<&[f64]> {
        self.branches
            .iter()
            .flat_map(|b| b.params())
            .chain(self.head.params())
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for b in &mut self.branches {
            out.extend(b.params_mut());
        }
        out.extend(self.head.params_mut());
        out
    }
}
