//! Dependency-free figures: SVG learning curves, PGM and ASCII heatmaps of
//! convolutional feature maps.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::{Layer, Network};
use crate::pipeline::train::LearningCurve;
use crate::tensor::Tensor;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

fn polyline(values: &[f64], epochs: usize, lo: f64, hi: f64, color: &str) -> String {
    let span = (hi - lo).max(1e-12);
    let steps = epochs.saturating_sub(1).max(1) as f64;
    let pts: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = MARGIN + (WIDTH - 2.0 * MARGIN) * i as f64 / steps;
            let y = HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / span;
            format!("{x:.2},{y:.2}")
        })
        .collect();
    format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        pts.join(" ")
    )
}

/// Train and validation loss against epoch, with the kept epoch marked.
pub fn learning_curve_svg(curve: &LearningCurve, title: &str) -> String {
    let epochs = curve.len();
    let all = curve.train_loss.iter().chain(&curve.val_loss).copied();
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">{}</text>", WIDTH / 2.0, escape(title));
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>");
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">epoch (1 to {epochs})</text>", WIDTH / 2.0, HEIGHT - 15.0);
    let _ = writeln!(s, "<text x=\"12\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 12 {})\">cross-entropy</text>", HEIGHT / 2.0, HEIGHT / 2.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{hi:.3}</text>", x0 - 4.0, y1 + 4.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{lo:.3}</text>", x0 - 4.0, y0);
    s.push_str(&polyline(&curve.train_loss, epochs, lo, hi, "#1f77b4"));
    s.push_str(&polyline(&curve.val_loss, epochs, lo, hi, "#d62728"));
    if let Some(best) = curve.best_epoch {
        let x = MARGIN + (WIDTH - 2.0 * MARGIN) * best as f64 / epochs.saturating_sub(1).max(1) as f64;
        let _ = writeln!(s, "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{y1}\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>");
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f77b4\">train</text>", x1 - 80.0, y1 + 10.0);
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">validation</text>", x1 - 80.0, y1 + 25.0);
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn scaled(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    values.iter().map(|v| if span > 0.0 { (v - lo) / span } else { 0.0 }).collect()
}

/// Binary 8-bit PGM (`P5`), min-max scaled. Row-major `h x w` input.
pub fn pgm(values: &[f64], h: usize, w: usize) -> Result<Vec<u8>> {
    if values.len() != h * w {
        return Err(Error::Shape(format!("heatmap of {h}x{w} needs {} values, got {}", h * w, values.len())));
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(scaled(values).iter().map(|v| (v * 255.0).round() as u8));
    Ok(out)
}

/// Character-ramp rendering, one text row per heatmap row.
pub fn ascii_heatmap(values: &[f64], h: usize, w: usize) -> Result<String> {
    if values.len() != h * w {
        return Err(Error::Shape(format!("heatmap of {h}x{w} needs {} values, got {}", h * w, values.len())));
    }
    const RAMP: &[u8] = b" .:-=+*#%@";
    let s = scaled(values);
    let mut out = String::with_capacity(h * (w + 1));
    for row in s.chunks(w) {
        for v in row {
            out.push(RAMP[((v * (RAMP.len() - 1) as f64).round()) as usize] as char);
        }
        out.push('\n');
    }
    Ok(out)
}

/// One `h x w` map per filter of a 2D feature map stack.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub values: Vec<f64>,
}

/// Activated feature maps of the `conv_index`-th (0-based) 2D convolution of
/// `net` for input `x`. The map after the following ReLU is used when one is
/// present.
pub fn conv_feature_maps(net: &Network, x: &Tensor, conv_index: usize) -> Result<Vec<FeatureMap>> {
    let convs: Vec<usize> = net
        .layers()
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l, Layer::Conv2d(_)))
        .map(|(i, _)| i)
        .collect();
    let &layer = convs
        .get(conv_index)
        .ok_or_else(|| Error::validation(format!("network has {} 2D convolutions, asked for #{conv_index}", convs.len())))?;
    let acts = net.activations(x)?;
    let pick = if matches!(net.layers().get(layer + 1), Some(Layer::Relu)) { layer + 1 } else { layer };
    let t = &acts[pick];
    let [h, w, c] = t.shape()[..] else {
        return Err(Error::Shape(format!("layer {pick} output is not H x W x C")));
    };
    Ok((0..c)
        .map(|ch| FeatureMap {
            height: h,
            width: w,
            values: (0..h * w).map(|p| t.data()[p * c + ch]).collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_header_and_scaling() {
        let img = pgm(&[0.0, 1.0, 2.0, 4.0], 2, 2).unwrap();
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert_eq!(&img[header.len()..], &[0, 64, 128, 255]);
        assert!(pgm(&[1.0], 2, 2).is_err());
    }

    #[test]
    fn ascii_rows() {
        let a = ascii_heatmap(&[0.0, 1.0, 1.0, 0.0], 2, 2).unwrap();
        assert_eq!(a, " @\n@ \n");
    }

    #[test]
    fn svg_contains_both_series() {
        let curve = LearningCurve { train_loss: vec![0.7, 0.5, 0.4], val_loss: vec![0.72, 0.6, 0.65], best_epoch: Some(1) };
        let svg = learning_curve_svg(&curve, "fold 0 <cnn>");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("&lt;cnn&gt;"));
    }
}
