//! Sum-of-products pipeline: window units, channel reduction, early
//! negative detection, and the settled-value activation/pooling stages.

pub mod end;
pub mod pool;
pub mod ppu;
pub mod wpu;

pub use end::{run_end, EndState, EndStatus};
pub use pool::{maxpool, relu};
pub use ppu::{ppu_compute, PixelResult, WpuKind};
pub use wpu::{inner_product, wpu_spatial, wpu_temporal, Kernel, Window};

use crate::msdf::MsdfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SopError {
    #[error("expected {expected} elements, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("window pixels must share one stream length")]
    RaggedWindow,
    #[error("{windows} windows vs {kernels} kernels")]
    ChannelMismatch { windows: usize, kernels: usize },
    #[error("negative-detection monitor already settled")]
    EndNotRunning,
    #[error("pool of size {k} stride {s} does not tile a {side}x{side} map")]
    BadPoolGeometry { side: usize, k: usize, s: usize },
    #[error(transparent)]
    Msdf(#[from] MsdfError),
}
