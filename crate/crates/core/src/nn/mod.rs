//! A small deterministic CNN engine: same-padded 1D/2D convolution, pooling,
//! dense layers, ReLU, dropout, softmax, cross-entropy, exact reverse-mode
//! gradients, and Adam. All arithmetic is `f64`.

pub mod adam;
pub mod classifier;
pub mod gemm;
pub mod io;
pub mod layers;
pub mod network;

pub use adam::{AdamConfig, AdamState};
pub use classifier::{
    argmax, categorical_cross_entropy, cross_entropy, cross_entropy_grad, Classifier, FeatureFusionNet,
};
pub use layers::{relu, softmax, Conv, Dense, Layer, Mode, PoolKind};
pub use network::{Gradients, Network, NetworkBuilder};
