//! Desk-scale model constructors.

use super::toy::{Layer, Shape, ToyModel};
use crate::tensor::Activation;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense net from a dimension chain, relu hidden layers, identity output.
pub fn dense_from_dims(dims: &[usize], seed: u64) -> ToyModel {
    assert!(dims.len() >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let act = if i + 2 == dims.len() {
                Activation::Identity
            } else {
                Activation::Relu
            };
            Layer::dense(pair[1], pair[0], act, &mut rng)
        })
        .collect();
    ToyModel::new(layers, Shape::Flat(dims[0])).expect("chain dims compose")
}

/// 784-64-32-10 dense classifier for 28x28 images.
pub fn dense_mnist(seed: u64) -> ToyModel {
    dense_from_dims(&[784, 64, 32, 10], seed)
}

/// 64-32-16-10 dense classifier for 8x8 digit images.
pub fn dense_digits(seed: u64) -> ToyModel {
    dense_from_dims(&[64, 32, 16, 10], seed)
}

/// Small convolutional classifier for 28x28 images:
/// two conv3x3+pool blocks (8 and 16 filters) into a 32-unit dense layer.
pub fn conv_mnist(seed: u64) -> ToyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = vec![
        Layer::conv2d(8, 1, 3, 3, Activation::Relu, &mut rng),
        Layer::MaxPool2,
        Layer::conv2d(16, 8, 3, 3, Activation::Relu, &mut rng),
        Layer::MaxPool2,
        Layer::Flatten,
        Layer::dense(32, 16 * 5 * 5, Activation::Relu, &mut rng),
        Layer::dense(10, 32, Activation::Identity, &mut rng),
    ];
    ToyModel::new(layers, Shape::Image { c: 1, h: 28, w: 28 }).expect("conv dims compose")
}
