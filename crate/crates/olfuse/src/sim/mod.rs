//! Bit-exact fused-pyramid simulator with cycle and digit accounting.

pub mod feature;
pub mod fused;
pub mod reference;

pub use feature::FeatureMap;
pub use fused::{run_fused, Emission, SimOptions, SimReport, SimRun};
pub use reference::{random_input, reference_forward, LayerWeights, NetWeights};

use crate::fixed::Fx;
use crate::msdf::MsdfError;
use crate::sop::SopError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("layer {layer} expects a {expected:?} input (side, channels), found {found:?}")]
    ShapeMismatch {
        layer: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("layer {layer} has no weights")]
    MissingWeights { layer: usize },
    #[error(
        "activation at layer {layer} channel {channel} ({y},{x}) is {value}, \
         outside the storable range (-1, 1)"
    )]
    ActivationOverflow {
        layer: usize,
        channel: usize,
        y: usize,
        x: usize,
        value: Fx,
    },
    #[error("plan references layer {layer}, but the network has {layers} layers")]
    PlanMismatch { layer: usize, layers: usize },
    #[error(transparent)]
    Sop(#[from] SopError),
    #[error(transparent)]
    Msdf(#[from] MsdfError),
}
