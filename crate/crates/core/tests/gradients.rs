mod common;

use common::{check_input_gradient, check_param_gradients, fusion_pattern, network_pattern, random_tensor};
use connectome::nn::{cross_entropy_grad, softmax, Classifier, Dense, Layer, Mode, Network, NetworkBuilder, PoolKind};
use connectome::pipeline::Architecture;
use connectome::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small(input: Vec<usize>, seed: u64, body: impl FnOnce(&mut NetworkBuilder<'_, ChaCha8Rng>)) -> Network {
    let mut r = rng(seed);
    let mut b = NetworkBuilder::new(input, &mut r);
    body(&mut b);
    if b.current_shape().len() > 1 {
        b.flatten().unwrap();
    }
    b.dense(2).unwrap().softmax().unwrap();
    b.build().unwrap()
}

fn assert_gradients(name: &str, net: &Network, seed: u64) {
    let x = random_tensor(net.input_shape().to_vec(), &mut rng(seed + 100));
    for target in 0..2 {
        let p = check_param_gradients(net, &[&x], target, 24, seed, |m| network_pattern(m, &x));
        let i = check_input_gradient(net, &x, target, 24, seed);
        assert!(p.passes(TOL) && i.passes(TOL), "{name}: params {p:?}, input {i:?}");
    }
}

#[test]
fn conv2d() {
    let net = small(vec![5, 6, 2], 1, |b| {
        b.conv2d(3, 3).unwrap();
    });
    assert_gradients("conv2d", &net, 1);
}

#[test]
fn conv1d() {
    let net = small(vec![9, 3], 2, |b| {
        b.conv1d(4, 3).unwrap();
    });
    assert_gradients("conv1d", &net, 2);
}

#[test]
fn avg_pool1d() {
    let net = small(vec![9, 2], 3, |b| {
        b.conv1d(3, 3).unwrap().avg_pool1d(2, 2).unwrap();
    });
    assert_gradients("avgpool1d", &net, 3);
}

#[test]
fn pool2d_max_and_avg() {
    for (k, kind) in [PoolKind::Max, PoolKind::Avg].into_iter().enumerate() {
        let net = small(vec![6, 6, 2], 4 + k as u64, |b| {
            b.conv2d(3, 3).unwrap().pool2d(kind, 2, 2).unwrap();
        });
        assert_gradients("pool2d", &net, 4 + k as u64);
    }
}

#[test]
fn dense_relu_dropout() {
    let net = small(vec![7], 6, |b| {
        b.dense(6).unwrap().relu().unwrap().dropout(0.5).unwrap().dense(5).unwrap();
    });
    assert_gradients("dense/relu/dropout", &net, 6);
}

#[test]
fn full_cnn2d() {
    let arch = Architecture::default();
    let net = arch.cnn2d(&[16, 16, 5], &mut rng(7)).unwrap();
    let x = random_tensor(vec![16, 16, 5], &mut rng(70));
    let check = check_param_gradients(&net, &[&x], 0, 6, 7, |m| network_pattern(m, &x));
    assert!(check.passes(TOL), "cnn2d {check:?}");
}

#[test]
fn full_cnn1d() {
    let arch = Architecture::default();
    let net = arch.cnn1d(&[34, 5], &mut rng(8)).unwrap();
    let x = random_tensor(vec![34, 5], &mut rng(80));
    for target in 0..2 {
        let check = check_param_gradients(&net, &[&x], target, 16, 8, |m| network_pattern(m, &x));
        assert!(check.passes(TOL), "cnn1d {check:?}");
    }
    assert!(check_input_gradient(&net, &x, 1, 16, 8).passes(TOL));
}

#[test]
fn full_feature_fusion() {
    let arch = Architecture { conv2d_filters: vec![8, 4], dense2d: 16, fusion_dense: 16, ..Architecture::default() };
    let shapes = vec![vec![16, 16, 5], vec![16, 16, 5], vec![34, 5]];
    let net = arch.feature_fusion(&shapes, &mut rng(9)).unwrap();
    let mut r = rng(90);
    let xs: Vec<Tensor> = shapes.iter().map(|s| random_tensor(s.clone(), &mut r)).collect();
    let refs: Vec<&Tensor> = xs.iter().collect();
    let check = check_param_gradients(&net, &refs, 1, 8, 9, |m| fusion_pattern(m, &refs));
    assert!(check.passes(TOL), "fusion {check:?}");
}

#[test]
fn softmax_cross_entropy_gradient_is_p_minus_onehot() {
    let net = Network::new(vec![4], vec![Layer::Softmax]).unwrap();
    let z = Tensor::from_vec(vec![0.3, -1.2, 2.0, 0.1]);
    let (p, cache) = net.forward::<ChaCha8Rng>(&z, &mut Mode::Eval).unwrap();
    for target in 0..4 {
        let (dz, _) = net.backward(&cache, Tensor::from_vec(cross_entropy_grad(p.data(), target))).unwrap();
        for (k, g) in dz.data().iter().enumerate() {
            let expect = p.data()[k] - f64::from(k == target);
            assert!((g - expect).abs() < 1e-12, "target {target} k {k}: {g} vs {expect}");
        }
    }
}

#[test]
fn logistic_regression_closed_form() {
    let (inputs, outputs) = (3, 2);
    let weights = vec![0.2, -0.1, 0.4, 0.3, -0.5, 0.05];
    let bias = vec![0.1, -0.2];
    let dense = Dense { inputs, outputs, weights: weights.clone(), bias: bias.clone() };
    let net = Network::new(vec![inputs], vec![Layer::Dense(dense), Layer::Softmax]).unwrap();
    let x = [1.5, -0.7, 0.4];
    let logits: Vec<f64> = (0..outputs)
        .map(|c| bias[c] + (0..inputs).map(|i| x[i] * weights[i * outputs + c]).sum::<f64>())
        .collect();
    let p = softmax(&logits);
    let target = 1;
    let (loss, grads) = net
        .loss_and_grad(&[&Tensor::from_vec(x.to_vec())], target, &mut Mode::<ChaCha8Rng>::Eval)
        .unwrap();
    assert!((loss + p[target].ln()).abs() < 1e-12);
    for i in 0..inputs {
        for c in 0..outputs {
            let expect = x[i] * (p[c] - f64::from(c == target));
            assert!((grads.0[0][i * outputs + c] - expect).abs() < 1e-12);
        }
    }
    for c in 0..outputs {
        assert!((grads.0[1][c] - (p[c] - f64::from(c == target))).abs() < 1e-12);
    }
}

#[test]
fn confident_correct_prediction_has_zero_gradient() {
    let dense = Dense { inputs: 1, outputs: 2, weights: vec![1000.0, -1000.0], bias: vec![0.0, 0.0] };
    let net = Network::new(vec![1], vec![Layer::Dense(dense), Layer::Softmax]).unwrap();
    let (loss, grads) = net
        .loss_and_grad(&[&Tensor::from_vec(vec![1.0])], 0, &mut Mode::<ChaCha8Rng>::Eval)
        .unwrap();
    assert!(loss < 1e-11);
    assert_eq!(grads.max_abs(), 0.0);
}
