//! Shared test networks. Compiled only for tests.

use crate::net::{LayerSpec, NetworkSpec};

pub fn lenet_front() -> NetworkSpec {
    NetworkSpec::new(
        "lenet5",
        vec![
            LayerSpec::conv(5, 1, 1, 6, 32, true),
            LayerSpec::pool(2, 2, 6, 28),
            LayerSpec::conv(5, 1, 6, 16, 14, true),
            LayerSpec::pool(2, 2, 16, 10),
        ],
    )
    .unwrap()
}

pub fn alexnet_front() -> NetworkSpec {
    NetworkSpec::new(
        "alexnet-front",
        vec![
            LayerSpec::conv(11, 4, 3, 96, 227, true),
            LayerSpec::pool(3, 2, 96, 55),
            LayerSpec::conv(5, 1, 96, 256, 27, true),
            LayerSpec::pool(3, 2, 256, 23),
        ],
    )
    .unwrap()
}

pub fn vgg16_front() -> NetworkSpec {
    NetworkSpec::new(
        "vgg16-front",
        vec![
            LayerSpec::conv(3, 1, 3, 64, 224, true),
            LayerSpec::conv(3, 1, 64, 64, 222, true),
            LayerSpec::pool(2, 2, 64, 220),
            LayerSpec::conv(3, 1, 64, 128, 110, true),
            LayerSpec::conv(3, 1, 128, 128, 108, true),
            LayerSpec::pool(2, 2, 128, 106),
        ],
    )
    .unwrap()
}

/// Two small convolutions around a pool; fast enough for digit-level sweeps.
pub fn tiny_two_conv() -> NetworkSpec {
    NetworkSpec::new(
        "tiny",
        vec![
            LayerSpec::conv(3, 1, 1, 2, 12, true),
            LayerSpec::pool(2, 2, 2, 10),
            LayerSpec::conv(3, 1, 2, 3, 5, true),
        ],
    )
    .unwrap()
}
