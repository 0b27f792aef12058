use rand::Rng;

use super::layers::{Conv, Dense, Layer, LayerCache, Mode, PoolKind};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Per-parameter-tensor gradients, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like(params: &[&[f64]]) -> Self {
        Gradients(params.iter().map(|p| vec![0.0; p.len()]).collect())
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.0.iter_mut().flatten().for_each(|v| *v *= s);
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }
}

/// A sequential stack of layers with validated shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    shapes: Vec<Vec<usize>>,
}

pub type NetworkCache = Vec<LayerCache>;

impl Network {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        let mut shapes = Vec::with_capacity(layers.len());
        let mut cur = input_shape.clone();
        for (i, layer) in layers.iter().enumerate() {
            cur = layer.output_shape(i, &cur)?;
            shapes.push(cur.clone());
        }
        Ok(Self { input_shape, layers, shapes })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().map(|s| s.as_slice()).unwrap_or(&self.input_shape)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Output shape of every layer.
    pub fn layer_shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn params(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(Error::shape(format!(
                "network expects input {}, got {}",
                crate::tensor::shape_string(&self.input_shape),
                x.shape_string()
            )));
        }
        Ok(())
    }

    pub fn forward<R: Rng + ?Sized>(&self, x: &Tensor, mode: &mut Mode<'_, R>) -> Result<(Tensor, NetworkCache)> {
        self.check_input(x)?;
        let mut cur = x.clone();
        let mut cache = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let (out, c) = layer.forward(cur, mode);
            if !out.all_finite() {
                return Err(Error::Numeric { layer: i, message: format!("non-finite {} output", layer.kind_name()) });
            }
            cur = out;
            cache.push(c);
        }
        Ok((cur, cache))
    }

    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        self.forward::<rand_chacha::ChaCha8Rng>(x, &mut Mode::Eval).map(|(y, _)| y)
    }

    /// Output of every layer in eval mode.
    pub fn activations(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        self.check_input(x)?;
        let mut cur = x.clone();
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (y, _) = layer.forward::<rand_chacha::ChaCha8Rng>(cur, &mut Mode::Eval);
            out.push(y.clone());
            cur = y;
        }
        Ok(out)
    }

    /// Reverse pass; returns the input gradient and all parameter gradients.
    pub fn backward(&self, cache: &NetworkCache, grad_out: Tensor) -> Result<(Tensor, Gradients)> {
        let mut grads: Vec<Vec<Vec<f64>>> = Vec::with_capacity(self.layers.len());
        let mut g = grad_out;
        for (i, (layer, c)) in self.layers.iter().zip(cache).enumerate().rev() {
            let (dx, dp) = layer.backward(c, g);
            if !dx.all_finite() || dp.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Numeric { layer: i, message: format!("non-finite {} gradient", layer.kind_name()) });
            }
            grads.push(dp);
            g = dx;
        }
        grads.reverse();
        Ok((g, Gradients(grads.into_iter().flatten().collect())))
    }
}

/// Builds a [`Network`] layer by layer, drawing initial weights from `rng`.
pub struct NetworkBuilder<'a, R: Rng + ?Sized> {
    input_shape: Vec<usize>,
    current: Vec<usize>,
    layers: Vec<Layer>,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> NetworkBuilder<'a, R> {
    pub fn new(input_shape: Vec<usize>, rng: &'a mut R) -> Self {
        Self { current: input_shape.clone(), input_shape, layers: Vec::new(), rng }
    }

    pub fn current_shape(&self) -> &[usize] {
        &self.current
    }

    fn push(&mut self, layer: Layer) -> Result<&mut Self> {
        self.current = layer.output_shape(self.layers.len(), &self.current)?;
        self.layers.push(layer);
        Ok(self)
    }

    fn channels(&self) -> usize {
        self.current.last().copied().unwrap_or(0)
    }

    /// Same-padded 2D convolution.
    pub fn conv2d(&mut self, filters: usize, kernel: usize) -> Result<&mut Self> {
        let c = Conv::new(self.channels(), filters, (kernel, kernel), 1, true, self.rng);
        self.push(Layer::Conv2d(c))
    }

    /// Same-padded 1D convolution.
    pub fn conv1d(&mut self, filters: usize, kernel: usize) -> Result<&mut Self> {
        let c = Conv::new(self.channels(), filters, (kernel, 1), 1, true, self.rng);
        self.push(Layer::Conv1d(c))
    }

    pub fn avg_pool1d(&mut self, size: usize, stride: usize) -> Result<&mut Self> {
        self.push(Layer::AvgPool1d { size, stride })
    }

    pub fn pool2d(&mut self, kind: PoolKind, size: usize, stride: usize) -> Result<&mut Self> {
        self.push(Layer::Pool2d { kind, size, stride })
    }

    pub fn flatten(&mut self) -> Result<&mut Self> {
        self.push(Layer::Flatten)
    }

    pub fn dense(&mut self, outputs: usize) -> Result<&mut Self> {
        let [inputs] = self.current[..] else {
            return Err(Error::shape(format!(
                "layer {}: dense needs a flat input",
                self.layers.len()
            )));
        };
        let d = Dense::new(inputs, outputs, self.rng);
        self.push(Layer::Dense(d))
    }

    pub fn relu(&mut self) -> Result<&mut Self> {
        self.push(Layer::Relu)
    }

    pub fn dropout(&mut self, ratio: f64) -> Result<&mut Self> {
        if !(0.0..1.0).contains(&ratio) {
            return Err(Error::validation(format!("dropout ratio {ratio} outside [0, 1)")));
        }
        self.push(Layer::Dropout { ratio })
    }

    pub fn softmax(&mut self) -> Result<&mut Self> {
        self.push(Layer::Softmax)
    }

    pub fn build(&mut self) -> Result<Network> {
        Network::new(self.input_shape.clone(), std::mem::take(&mut self.layers))
    }
}
