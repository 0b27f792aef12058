//! Network encoding: input shape, a layer descriptor table, then every
//! parameter tensor in declaration order as little-endian `f64`.

use super::layers::{Conv, Dense, Layer, PoolKind};
use super::network::Network;
use crate::binfmt::{BinReader, BinWriter};
use crate::error::{Error, Result};

const CONV2D: u8 = 1;
const CONV1D: u8 = 2;
const AVGPOOL1D: u8 = 3;
const POOL2D: u8 = 4;
const FLATTEN: u8 = 5;
const DENSE: u8 = 6;
const RELU: u8 = 7;
const DROPOUT: u8 = 8;
const SOFTMAX: u8 = 9;

fn write_conv(w: &mut BinWriter, c: &Conv) {
    w.u32(c.in_channels as u32);
    w.u32(c.filters as u32);
    w.u32(c.kernel.0 as u32);
    w.u32(c.kernel.1 as u32);
    w.u32(c.stride as u32);
    w.u8(u8::from(c.padding));
}

fn read_conv(r: &mut BinReader<'_>) -> Result<Conv> {
    let in_channels = r.u32()? as usize;
    let filters = r.u32()? as usize;
    let kernel = (r.u32()? as usize, r.u32()? as usize);
    let stride = r.u32()? as usize;
    let padding = r.u8()? != 0;
    Ok(Conv { in_channels, filters, kernel, stride, padding, weights: Vec::new(), bias: Vec::new() })
}

pub fn write_network(w: &mut BinWriter, net: &Network) {
    w.dims(net.input_shape());
    w.u32(net.layers().len() as u32);
    for layer in net.layers() {
        match layer {
            Layer::Conv2d(c) => {
                w.u8(CONV2D);
                write_conv(w, c);
            }
            Layer::Conv1d(c) => {
                w.u8(CONV1D);
                write_conv(w, c);
            }
            Layer::AvgPool1d { size, stride } => {
                w.u8(AVGPOOL1D);
                w.u32(*size as u32);
                w.u32(*stride as u32);
            }
            Layer::Pool2d { kind, size, stride } => {
                w.u8(POOL2D);
                w.u8(match kind {
                    PoolKind::Avg => 0,
                    PoolKind::Max => 1,
                });
                w.u32(*size as u32);
                w.u32(*stride as u32);
            }
            Layer::Flatten => w.u8(FLATTEN),
            Layer::Dense(d) => {
                w.u8(DENSE);
                w.u32(d.inputs as u32);
                w.u32(d.outputs as u32);
            }
            Layer::Relu => w.u8(RELU),
            Layer::Dropout { ratio } => {
                w.u8(DROPOUT);
                w.f64(*ratio);
            }
            Layer::Softmax => w.u8(SOFTMAX),
        }
    }
    for p in net.params() {
        w.f64s(p);
    }
}

pub fn read_network(r: &mut BinReader<'_>) -> Result<Network> {
    let input_shape = r.dims()?;
    let count = r.u32()? as usize;
    let mut layers = Vec::with_capacity(count);
    for i in 0..count {
        let layer = match r.u8()? {
            CONV2D => Layer::Conv2d(read_conv(r)?),
            CONV1D => Layer::Conv1d(read_conv(r)?),
            AVGPOOL1D => Layer::AvgPool1d { size: r.u32()? as usize, stride: r.u32()? as usize },
            POOL2D => {
                let kind = match r.u8()? {
                    0 => PoolKind::Avg,
                    1 => PoolKind::Max,
                    k => return Err(Error::format(format!("layer {i}: unknown pool kind {k}"))),
                };
                Layer::Pool2d { kind, size: r.u32()? as usize, stride: r.u32()? as usize }
            }
            FLATTEN => Layer::Flatten,
            DENSE => Layer::Dense(Dense {
                inputs: r.u32()? as usize,
                outputs: r.u32()? as usize,
                weights: Vec::new(),
                bias: Vec::new(),
            }),
            RELU => Layer::Relu,
            DROPOUT => Layer::Dropout { ratio: r.f64()? },
            SOFTMAX => Layer::Softmax,
            k => return Err(Error::format(format!("layer {i}: unknown layer kind {k}"))),
        };
        layers.push(layer);
    }
    for (i, layer) in layers.iter_mut().enumerate() {
        let (weights, bias, w_len, b_len) = match layer {
            Layer::Conv2d(c) | Layer::Conv1d(c) => {
                let wl = c.kernel.0 * c.kernel.1 * c.in_channels * c.filters;
                (&mut c.weights, &mut c.bias, wl, c.filters)
            }
            Layer::Dense(d) => (&mut d.weights, &mut d.bias, d.inputs * d.outputs, d.outputs),
            _ => continue,
        };
        *weights = r.f64s()?;
        *bias = r.f64s()?;
        if weights.len() != w_len || bias.len() != b_len {
            return Err(Error::format(format!(
                "layer {i}: parameter blob sizes {}/{} do not match descriptor {w_len}/{b_len}",
                weights.len(),
                bias.len()
            )));
        }
    }
    Network::new(input_shape, layers)
}
