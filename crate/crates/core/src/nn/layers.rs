//! Layer kinds with forward and reverse-mode passes. Activations are
//! per-sample tensors: `H x W x C` for 2D maps, `L x C` for 1D maps, and flat
//! vectors after [`Layer::Flatten`].

use rand::Rng;

use super::gemm::gemm;
use crate::error::{Error, Result};
use crate::tensor::{shape_string, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Avg,
    Max,
}

/// Cross-correlation (no kernel flip) with optional "same" zero padding.
/// Weights are laid out `[kh, kw, in_channels, filters]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv {
    pub in_channels: usize,
    pub filters: usize,
    pub kernel: (usize, usize),
    pub stride: usize,
    pub padding: bool,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `[inputs, outputs]`
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d(Conv),
    /// 1D convolution over `L x C` inputs; `kernel.1` is always 1.
    Conv1d(Conv),
    AvgPool1d { size: usize, stride: usize },
    Pool2d { kind: PoolKind, size: usize, stride: usize },
    Flatten,
    Dense(Dense),
    Relu,
    Dropout { ratio: f64 },
    Softmax,
}

/// Values kept from the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub enum LayerCache {
    Conv { input_shape: Vec<usize>, cols: Vec<f64> },
    Pool1d { input_shape: Vec<usize> },
    Pool2d { input_shape: Vec<usize>, argmax: Vec<usize> },
    Flatten { input_shape: Vec<usize> },
    Dense { input: Vec<f64> },
    Relu { mask: Vec<bool> },
    Dropout { scale: Vec<f64> },
    Identity,
    Softmax { output: Vec<f64> },
}

pub enum Mode<'a, R: Rng + ?Sized> {
    Eval,
    Train(&'a mut R),
}

fn glorot<R: Rng + ?Sized>(len: usize, fan_in: usize, fan_out: usize, rng: &mut R) -> Vec<f64> {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..=bound)).collect()
}

impl Conv {
    pub fn new<R: Rng + ?Sized>(
        in_channels: usize,
        filters: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: bool,
        rng: &mut R,
    ) -> Self {
        let (kh, kw) = kernel;
        let len = kh * kw * in_channels * filters;
        Self {
            in_channels,
            filters,
            kernel,
            stride,
            padding,
            weights: glorot(len, kh * kw * in_channels, kh * kw * filters, rng),
            bias: vec![0.0; filters],
        }
    }

    fn pads(&self) -> (usize, usize) {
        if self.padding {
            ((self.kernel.0 - 1) / 2, (self.kernel.1 - 1) / 2)
        } else {
            (0, 0)
        }
    }

    fn patch_len(&self) -> usize {
        self.kernel.0 * self.kernel.1 * self.in_channels
    }

    fn out_hw(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let (ph, pw) = self.pads();
        let (kh, kw) = self.kernel;
        if h + 2 * ph < kh || w + 2 * pw < kw || self.stride == 0 {
            return None;
        }
        Some(((h + 2 * ph - kh) / self.stride + 1, (w + 2 * pw - kw) / self.stride + 1))
    }

    fn im2col(&self, input: &[f64], h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
        let (kh, kw) = self.kernel;
        let (ph, pw) = self.pads();
        let c = self.in_channels;
        let k = self.patch_len();
        let mut cols = vec![0.0; oh * ow * k];
        for oy in 0..oh {
            for ox in 0..ow {
                let row = &mut cols[(oy * ow + ox) * k..(oy * ow + ox + 1) * k];
                for dy in 0..kh {
                    let y = (oy * self.stride + dy) as isize - ph as isize;
                    if y < 0 || y >= h as isize {
                        continue;
                    }
                    for dx in 0..kw {
                        let x = (ox * self.stride + dx) as isize - pw as isize;
                        if x < 0 || x >= w as isize {
                            continue;
                        }
                        let src = (y as usize * w + x as usize) * c;
                        let dst = (dy * kw + dx) * c;
                        row[dst..dst + c].copy_from_slice(&input[src..src + c]);
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, dcols: &[f64], h: usize, w: usize, oh: usize, ow: usize) -> Vec<f64> {
        let (kh, kw) = self.kernel;
        let (ph, pw) = self.pads();
        let c = self.in_channels;
        let k = self.patch_len();
        let mut out = vec![0.0; h * w * c];
        for oy in 0..oh {
            for ox in 0..ow {
                let row = &dcols[(oy * ow + ox) * k..(oy * ow + ox + 1) * k];
                for dy in 0..kh {
                    let y = (oy * self.stride + dy) as isize - ph as isize;
                    if y < 0 || y >= h as isize {
                        continue;
                    }
                    for dx in 0..kw {
                        let x = (ox * self.stride + dx) as isize - pw as isize;
                        if x < 0 || x >= w as isize {
                            continue;
                        }
                        let dst = (y as usize * w + x as usize) * c;
                        let src = (dy * kw + dx) * c;
                        for (o, v) in out[dst..dst + c].iter_mut().zip(&row[src..src + c]) {
                            *o += v;
                        }
                    }
                }
            }
        }
        out
    }

    /// Forward on an `H x W x C` buffer; returns `(output, cols)`.
    fn forward_hw(&self, input: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>, usize, usize) {
        let (oh, ow) = self.out_hw(h, w).expect("shape validated at construction");
        let cols = self.im2col(input, h, w, oh, ow);
        let p = oh * ow;
        let mut out = Vec::with_capacity(p * self.filters);
        for _ in 0..p {
            out.extend_from_slice(&self.bias);
        }
        gemm(p, self.patch_len(), self.filters, &cols, false, &self.weights, false, &mut out, 1.0);
        (out, cols, oh, ow)
    }

    /// Returns `(d_input, d_weights, d_bias)`.
    fn backward_hw(&self, cols: &[f64], grad: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (oh, ow) = self.out_hw(h, w).expect("shape validated at construction");
        let p = oh * ow;
        let k = self.patch_len();
        let r = self.filters;
        let mut dw = vec![0.0; k * r];
        gemm(k, p, r, cols, true, grad, false, &mut dw, 0.0);
        let mut db = vec![0.0; r];
        for row in grad.chunks(r) {
            for (d, g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        let mut dcols = vec![0.0; p * k];
        gemm(p, r, k, grad, false, &self.weights, true, &mut dcols, 0.0);
        (self.col2im(&dcols, h, w, oh, ow), dw, db)
    }
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        Self {
            inputs,
            outputs,
            weights: glorot(inputs * outputs, inputs, outputs, rng),
            bias: vec![0.0; outputs],
        }
    }

    pub fn apply(&self, input: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        gemm(1, self.inputs, self.outputs, input, false, &self.weights, false, &mut out, 1.0);
        out
    }
}

fn shape_err(layer: usize, what: &str, shape: &[usize]) -> Error {
    Error::shape(format!("layer {layer}: {what}, got input {}", shape_string(shape)))
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v.max(0.0)).collect()
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv2d(_) => "conv2d",
            Layer::Conv1d(_) => "conv1d",
            Layer::AvgPool1d { .. } => "avgpool1d",
            Layer::Pool2d { kind: PoolKind::Avg, .. } => "avgpool2d",
            Layer::Pool2d { kind: PoolKind::Max, .. } => "maxpool2d",
            Layer::Flatten => "flatten",
            Layer::Dense(_) => "dense",
            Layer::Relu => "relu",
            Layer::Dropout { .. } => "dropout",
            Layer::Softmax => "softmax",
        }
    }

    /// Output shape for `input`, or a shape error naming `index`.
    pub fn output_shape(&self, index: usize, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv2d(c) => {
                let [h, w, ch] = *input else {
                    return Err(shape_err(index, "conv2d expects H x W x C", input));
                };
                if ch != c.in_channels {
                    return Err(shape_err(index, &format!("conv2d expects {} channels", c.in_channels), input));
                }
                let (oh, ow) = c
                    .out_hw(h, w)
                    .ok_or_else(|| shape_err(index, "input smaller than kernel", input))?;
                Ok(vec![oh, ow, c.filters])
            }
            Layer::Conv1d(c) => {
                let [l, ch] = *input else {
                    return Err(shape_err(index, "conv1d expects L x C", input));
                };
                if ch != c.in_channels {
                    return Err(shape_err(index, &format!("conv1d expects {} channels", c.in_channels), input));
                }
                let (ol, _) = c
                    .out_hw(l, 1)
                    .ok_or_else(|| shape_err(index, "input shorter than kernel", input))?;
                Ok(vec![ol, c.filters])
            }
            Layer::AvgPool1d { size, stride } => {
                let [l, ch] = *input else {
                    return Err(shape_err(index, "avgpool1d expects L x C", input));
                };
                if l < *size || *stride == 0 || *size == 0 {
                    return Err(shape_err(index, "pool window larger than input", input));
                }
                Ok(vec![(l - size) / stride + 1, ch])
            }
            Layer::Pool2d { size, stride, .. } => {
                let [h, w, ch] = *input else {
                    return Err(shape_err(index, "pool2d expects H x W x C", input));
                };
                if h < *size || w < *size || *stride == 0 || *size == 0 {
                    return Err(shape_err(index, "pool window larger than input", input));
                }
                Ok(vec![(h - size) / stride + 1, (w - size) / stride + 1, ch])
            }
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Dense(d) => {
                if input != [d.inputs] {
                    return Err(shape_err(index, &format!("dense expects a vector of {}", d.inputs), input));
                }
                Ok(vec![d.outputs])
            }
            Layer::Relu | Layer::Dropout { .. } => Ok(input.to_vec()),
            Layer::Softmax => {
                if input.len() != 1 {
                    return Err(shape_err(index, "softmax expects a vector", input));
                }
                Ok(input.to_vec())
            }
        }
    }

    pub fn params(&self) -> Vec<&[f64]> {
        match self {
            Layer::Conv2d(c) | Layer::Conv1d(c) => vec![&c.weights, &c.bias],
            Layer::Dense(d) => vec![&d.weights, &d.bias],
            _ => vec![],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Layer::Conv2d(c) | Layer::Conv1d(c) => vec![&mut c.weights, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weights, &mut d.bias],
            _ => vec![],
        }
    }

    pub fn forward<R: Rng + ?Sized>(&self, input: Tensor, mode: &mut Mode<'_, R>) -> (Tensor, LayerCache) {
        let shape = input.shape().to_vec();
        match self {
            Layer::Conv2d(c) => {
                let (h, w) = (shape[0], shape[1]);
                let (out, cols, oh, ow) = c.forward_hw(input.data(), h, w);
                let t = Tensor::new(vec![oh, ow, c.filters], out).unwrap();
                (t, LayerCache::Conv { input_shape: shape, cols })
            }
            Layer::Conv1d(c) => {
                let (out, cols, ol, _) = c.forward_hw(input.data(), shape[0], 1);
                let t = Tensor::new(vec![ol, c.filters], out).unwrap();
                (t, LayerCache::Conv { input_shape: shape, cols })
            }
            Layer::AvgPool1d { size, stride } => {
                let (l, ch) = (shape[0], shape[1]);
                let ol = (l - size) / stride + 1;
                let x = input.data();
                let mut out = vec![0.0; ol * ch];
                for o in 0..ol {
                    for k in 0..*size {
                        let row = (o * stride + k) * ch;
                        for c in 0..ch {
                            out[o * ch + c] += x[row + c];
                        }
                    }
                }
                let inv = 1.0 / *size as f64;
                out.iter_mut().for_each(|v| *v *= inv);
                (Tensor::new(vec![ol, ch], out).unwrap(), LayerCache::Pool1d { input_shape: shape })
            }
            Layer::Pool2d { kind, size, stride } => {
                let (h, w, ch) = (shape[0], shape[1], shape[2]);
                let (oh, ow) = ((h - size) / stride + 1, (w - size) / stride + 1);
                let x = input.data();
                let mut out = vec![0.0; oh * ow * ch];
                let mut argmax = vec![0usize; if *kind == PoolKind::Max { oh * ow * ch } else { 0 }];
                for oy in 0..oh {
                    for ox in 0..ow {
                        for c in 0..ch {
                            let o = (oy * ow + ox) * ch + c;
                            let mut acc = 0.0;
                            let mut best = f64::NEG_INFINITY;
                            let mut best_idx = 0;
                            for dy in 0..*size {
                                for dx in 0..*size {
                                    let i = ((oy * stride + dy) * w + ox * stride + dx) * ch + c;
                                    acc += x[i];
                                    if x[i] > best {
                                        best = x[i];
                                        best_idx = i;
                                    }
                                }
                            }
                            match kind {
                                PoolKind::Avg => out[o] = acc / (size * size) as f64,
                                PoolKind::Max => {
                                    out[o] = best;
                                    argmax[o] = best_idx;
                                }
                            }
                        }
                    }
                }
                let t = Tensor::new(vec![oh, ow, ch], out).unwrap();
                (t, LayerCache::Pool2d { input_shape: shape, argmax })
            }
            Layer::Flatten => {
                let len = input.len();
                (input.reshape(vec![len]).unwrap(), LayerCache::Flatten { input_shape: shape })
            }
            Layer::Dense(d) => {
                let out = d.apply(input.data());
                (Tensor::from_vec(out), LayerCache::Dense { input: input.into_data() })
            }
            Layer::Relu => {
                let mask: Vec<bool> = input.data().iter().map(|v| *v > 0.0).collect();
                let out = relu(input.data());
                (Tensor::new(shape, out).unwrap(), LayerCache::Relu { mask })
            }
            Layer::Dropout { ratio } => match mode {
                Mode::Train(rng) if *ratio > 0.0 => {
                    let keep = 1.0 / (1.0 - ratio);
                    let scale: Vec<f64> = (0..input.len())
                        .map(|_| if rng.gen::<f64>() < *ratio { 0.0 } else { keep })
                        .collect();
                    let out = input.data().iter().zip(&scale).map(|(x, s)| x * s).collect();
                    (Tensor::new(shape, out).unwrap(), LayerCache::Dropout { scale })
                }
                _ => (input, LayerCache::Identity),
            },
            Layer::Softmax => {
                let out = softmax(input.data());
                (Tensor::from_vec(out.clone()), LayerCache::Softmax { output: out })
            }
        }
    }

    /// Returns the gradient with respect to the layer input and, for
    /// parameterized layers, `[d_weights, d_bias]`.
    pub fn backward(&self, cache: &LayerCache, grad: Tensor) -> (Tensor, Vec<Vec<f64>>) {
        match (self, cache) {
            (Layer::Conv2d(c), LayerCache::Conv { input_shape, cols }) => {
                let (dx, dw, db) = c.backward_hw(cols, grad.data(), input_shape[0], input_shape[1]);
                (Tensor::new(input_shape.clone(), dx).unwrap(), vec![dw, db])
            }
            (Layer::Conv1d(c), LayerCache::Conv { input_shape, cols }) => {
                let (dx, dw, db) = c.backward_hw(cols, grad.data(), input_shape[0], 1);
                (Tensor::new(input_shape.clone(), dx).unwrap(), vec![dw, db])
            }
            (Layer::AvgPool1d { size, stride }, LayerCache::Pool1d { input_shape }) => {
                let (l, ch) = (input_shape[0], input_shape[1]);
                let ol = grad.shape()[0];
                let g = grad.data();
                let inv = 1.0 / *size as f64;
                let mut dx = vec![0.0; l * ch];
                for o in 0..ol {
                    for k in 0..*size {
                        let row = (o * stride + k) * ch;
                        for c in 0..ch {
                            dx[row + c] += g[o * ch + c] * inv;
                        }
                    }
                }
                (Tensor::new(input_shape.clone(), dx).unwrap(), vec![])
            }
            (Layer::Pool2d { kind, size, stride }, LayerCache::Pool2d { input_shape, argmax }) => {
                let (w, ch) = (input_shape[1], input_shape[2]);
                let (oh, ow) = (grad.shape()[0], grad.shape()[1]);
                let g = grad.data();
                let mut dx = vec![0.0; input_shape.iter().product()];
                let inv = 1.0 / (size * size) as f64;
                for oy in 0..oh {
                    for ox in 0..ow {
                        for c in 0..ch {
                            let o = (oy * ow + ox) * ch + c;
                            match kind {
                                PoolKind::Max => dx[argmax[o]] += g[o],
                                PoolKind::Avg => {
                                    for dy in 0..*size {
                                        for dx_ in 0..*size {
                                            let i = ((oy * stride + dy) * w + ox * stride + dx_) * ch + c;
                                            dx[i] += g[o] * inv;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                (Tensor::new(input_shape.clone(), dx).unwrap(), vec![])
            }
            (Layer::Flatten, LayerCache::Flatten { input_shape }) => {
                (grad.reshape(input_shape.clone()).unwrap(), vec![])
            }
            (Layer::Dense(d), LayerCache::Dense { input }) => {
                let g = grad.data();
                let mut dw = vec![0.0; d.inputs * d.outputs];
                gemm(d.inputs, 1, d.outputs, input, false, g, false, &mut dw, 0.0);
                let mut dx = vec![0.0; d.inputs];
                gemm(1, d.outputs, d.inputs, g, false, &d.weights, true, &mut dx, 0.0);
                (Tensor::from_vec(dx), vec![dw, g.to_vec()])
            }
            (Layer::Relu, LayerCache::Relu { mask }) => {
                let shape = grad.shape().to_vec();
                let dx = grad
                    .data()
                    .iter()
                    .zip(mask)
                    .map(|(g, m)| if *m { *g } else { 0.0 })
                    .collect();
                (Tensor::new(shape, dx).unwrap(), vec![])
            }
            (Layer::Dropout { .. }, LayerCache::Dropout { scale }) => {
                let shape = grad.shape().to_vec();
                let dx = grad.data().iter().zip(scale).map(|(g, s)| g * s).collect();
                (Tensor::new(shape, dx).unwrap(), vec![])
            }
            (Layer::Dropout { .. }, LayerCache::Identity) => (grad, vec![]),
            (Layer::Softmax, LayerCache::Softmax { output }) => {
                let g = grad.data();
                let dot: f64 = g.iter().zip(output).map(|(a, b)| a * b).sum();
                let dx = output.iter().zip(g).map(|(p, gi)| p * (gi - dot)).collect();
                (Tensor::from_vec(dx), vec![])
            }
            (layer, _) => panic!("cache does not match layer {}", layer.kind_name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    fn eval<'a>() -> Mode<'a, ChaCha8Rng> {
        Mode::Eval
    }

    /// Six-nested-loop direct cross-correlation with same padding.
    fn conv2d_oracle(x: &Tensor, c: &Conv) -> Tensor {
        let (h, w, cin) = (x.shape()[0], x.shape()[1], x.shape()[2]);
        let (kh, kw) = c.kernel;
        let (ph, pw) = ((kh - 1) / 2, (kw - 1) / 2);
        let mut out = Tensor::zeros(vec![h, w, c.filters]);
        for r in 0..c.filters {
            for y in 0..h {
                for xx in 0..w {
                    let mut acc = c.bias[r];
                    for dy in 0..kh {
                        for dx in 0..kw {
                            for ch in 0..cin {
                                let sy = y as isize + dy as isize - ph as isize;
                                let sx = xx as isize + dx as isize - pw as isize;
                                if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                    continue;
                                }
                                let wv = c.weights[((dy * kw + dx) * cin + ch) * c.filters + r];
                                acc += wv * x.get(&[sy as usize, sx as usize, ch]);
                            }
                        }
                    }
                    out.set(&[y, xx, r], acc);
                }
            }
        }
        out
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut c = Conv::new(1, 1, (3, 3), 1, true, &mut rng());
        c.weights = vec![0.0; 9];
        c.weights[4] = 1.0;
        let x = Tensor::new(vec![3, 3, 1], (1..=9).map(f64::from).collect()).unwrap();
        let (y, _) = Layer::Conv2d(c).forward(x.clone(), &mut eval());
        assert_eq!(y, x);
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut c = Conv::new(2, 3, (3, 3), 1, true, &mut rng());
        c.bias = vec![0.5, -1.0, 2.0];
        let (y, _) = Layer::Conv2d(c).forward(Tensor::zeros(vec![4, 4, 2]), &mut eval());
        for p in y.data().chunks(3) {
            assert_eq!(p, &[0.5, -1.0, 2.0]);
        }
    }

    #[test]
    fn conv2d_matches_loop_oracle() {
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let mut c = Conv::new(2, 3, (3, 3), 1, true, &mut r);
        c.bias = vec![0.1, -0.2, 0.3];
        let x = Tensor::new(vec![5, 5, 2], (0..50).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let expected = conv2d_oracle(&x, &c);
        let (y, _) = Layer::Conv2d(c).forward(x, &mut eval());
        let diff = y.data().iter().zip(expected.data()).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn conv1d_shapes_and_oracle() {
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let c = Conv::new(5, 8, (3, 1), 1, true, &mut r);
        let layer = Layer::Conv1d(c.clone());
        assert_eq!(layer.output_shape(0, &[34, 5]).unwrap(), vec![34, 8]);
        let x = Tensor::new(vec![34, 5], (0..170).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let (y, _) = layer.forward(x.clone(), &mut eval());
        for l in 0..34 {
            for f in 0..8 {
                let mut acc = c.bias[f];
                for k in 0..3 {
                    let src = l as isize + k as isize - 1;
                    if src < 0 || src >= 34 {
                        continue;
                    }
                    for ch in 0..5 {
                        acc += c.weights[(k * 5 + ch) * 8 + f] * x.get(&[src as usize, ch]);
                    }
                }
                assert!((y.get(&[l, f]) - acc).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conv1d_delta_identity() {
        let mut c = Conv::new(1, 1, (3, 1), 1, true, &mut rng());
        c.weights = vec![0.0, 1.0, 0.0];
        let x = Tensor::new(vec![4, 1], vec![3.0, -1.0, 2.0, 5.0]).unwrap();
        let (y, _) = Layer::Conv1d(c).forward(x.clone(), &mut eval());
        assert_eq!(y, x);
    }

    #[test]
    fn conv_rejects_wrong_channels() {
        let c = Conv::new(3, 2, (3, 3), 1, true, &mut rng());
        let err = Layer::Conv2d(c).output_shape(4, &[8, 8, 2]).unwrap_err();
        assert!(err.to_string().contains("layer 4"));
    }

    #[test]
    fn avg_pool_examples() {
        let layer = Layer::AvgPool1d { size: 2, stride: 2 };
        let (y, _) = layer.forward(Tensor::new(vec![4, 1], vec![1., 3., 5., 7.]).unwrap(), &mut eval());
        assert_eq!(y.data(), &[2.0, 6.0]);
        let (y, _) = layer.forward(Tensor::new(vec![6, 2], vec![4.0; 12]).unwrap(), &mut eval());
        assert!(y.data().iter().all(|&v| v == 4.0));
        assert_eq!(layer.output_shape(0, &[34, 8]).unwrap(), vec![17, 8]);
        let overlapping = Layer::AvgPool1d { size: 2, stride: 1 };
        assert_eq!(overlapping.output_shape(0, &[34, 8]).unwrap(), vec![33, 8]);
    }

    #[test]
    fn dense_examples() {
        let mut d = Dense::new(3, 3, &mut rng());
        d.weights = vec![1., 0., 0., 0., 1., 0., 0., 0., 1.];
        assert_eq!(d.apply(&[1.0, -2.0, 3.0]), vec![1.0, -2.0, 3.0]);
        d.weights = vec![0.0; 9];
        d.bias = vec![0.5, 1.5, -2.0];
        assert_eq!(d.apply(&[1.0, -2.0, 3.0]), vec![0.5, 1.5, -2.0]);
    }

    #[test]
    fn dense_matches_loop() {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let mut d = Dense::new(7, 4, &mut r);
        d.bias = (0..4).map(|i| i as f64 * 0.1).collect();
        let x: Vec<f64> = (0..7).map(|_| r.gen_range(-1.0..1.0)).collect();
        let y = d.apply(&x);
        for o in 0..4 {
            let acc: f64 = d.bias[o] + (0..7).map(|i| x[i] * d.weights[i * 4 + o]).sum::<f64>();
            assert!((y[o] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn activations() {
        assert_eq!(relu(&[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[1000.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
        let p = softmax(&[0.3, -1.2, 2.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn dropout_modes() {
        let x = Tensor::from_vec(vec![1.0; 100]);
        let layer = Layer::Dropout { ratio: 0.5 };
        let (y, _) = layer.forward(x.clone(), &mut eval());
        assert_eq!(y, x);
        let mut r = rng();
        let (y, _) = Layer::Dropout { ratio: 0.0 }.forward(x.clone(), &mut Mode::Train(&mut r));
        assert_eq!(y, x);
        let (y, _) = layer.forward(x, &mut Mode::Train(&mut r));
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn dropout_expectation() {
        let layer = Layer::Dropout { ratio: 0.5 };
        let mut r = ChaCha8Rng::seed_from_u64(77);
        let (y, _) = layer.forward(Tensor::from_vec(vec![1.0; 100_000]), &mut Mode::Train(&mut r));
        let mean = y.data().iter().sum::<f64>() / 100_000.0;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn same_padding_preserves_dims() {
        let c2 = Layer::Conv2d(Conv::new(5, 4, (3, 3), 1, true, &mut rng()));
        assert_eq!(c2.output_shape(0, &[16, 16, 5]).unwrap(), vec![16, 16, 4]);
        let c1 = Layer::Conv1d(Conv::new(5, 4, (5, 1), 1, true, &mut rng()));
        assert_eq!(c1.output_shape(0, &[34, 5]).unwrap(), vec![34, 4]);
        let valid = Layer::Conv2d(Conv::new(5, 4, (3, 3), 1, false, &mut rng()));
        assert_eq!(valid.output_shape(0, &[16, 16, 5]).unwrap(), vec![14, 14, 4]);
    }
}
