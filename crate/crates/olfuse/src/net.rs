//! Network descriptions: square feature maps flowing through an alternating
//! chain of convolution and pooling layers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Conv,
    Pool,
}

/// One layer. Pools carry `n_in = m_out = channels` and no weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    /// Kernel side length.
    pub k: usize,
    /// Stride.
    pub s: usize,
    /// Input channels.
    pub n_in: usize,
    /// Output channels.
    pub m_out: usize,
    /// Input feature map side length.
    pub ifm: usize,
    /// Whether a rectifier follows (convs only).
    pub relu: bool,
}

impl LayerSpec {
    pub fn conv(k: usize, s: usize, n_in: usize, m_out: usize, ifm: usize, relu: bool) -> LayerSpec {
        LayerSpec { kind: LayerKind::Conv, k, s, n_in, m_out, ifm, relu }
    }

    pub fn pool(k: usize, s: usize, channels: usize, ifm: usize) -> LayerSpec {
        LayerSpec { kind: LayerKind::Pool, k, s, n_in: channels, m_out: channels, ifm, relu: false }
    }

    /// Output feature map side length; `None` if the kernel does not tile.
    pub fn ofm(&self) -> Option<usize> {
        if self.k == 0 || self.s == 0 || self.ifm < self.k {
            return None;
        }
        let diff = self.ifm - self.k;
        diff.is_multiple_of(self.s).then(|| diff / self.s + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub layers: Vec<LayerSpec>,
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("network has no layers")]
    Empty,
    #[error("layer {index} ({kind:?} k={k} s={s} ifm={ifm}): kernel does not tile the map")]
    Geometry { index: usize, kind: LayerKind, k: usize, s: usize, ifm: usize },
    #[error(
        "layer {from} produces {produced}x{produced}x{channels} but layer {to} expects \
         {expected_ifm}x{expected_ifm}x{expected_ch}"
    )]
    ChainMismatch {
        from: usize,
        to: usize,
        produced: usize,
        channels: usize,
        expected_ifm: usize,
        expected_ch: usize,
    },
}

impl NetworkSpec {
    pub fn new(name: impl Into<String>, layers: Vec<LayerSpec>) -> Result<NetworkSpec, NetError> {
        let net = NetworkSpec { name: name.into(), layers };
        net.validate()?;
        Ok(net)
    }

    /// Checks every layer tiles exactly and shapes chain layer to layer.
    pub fn validate(&self) -> Result<(), NetError> {
        if self.layers.is_empty() {
            return Err(NetError::Empty);
        }
        for (i, l) in self.layers.iter().enumerate() {
            let ofm = l.ofm().ok_or(NetError::Geometry {
                index: i,
                kind: l.kind,
                k: l.k,
                s: l.s,
                ifm: l.ifm,
            })?;
            if let Some(next) = self.layers.get(i + 1) {
                if next.ifm != ofm || next.n_in != l.m_out {
                    return Err(NetError::ChainMismatch {
                        from: i,
                        to: i + 1,
                        produced: ofm,
                        channels: l.m_out,
                        expected_ifm: next.ifm,
                        expected_ch: next.n_in,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn conv_indices(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind == LayerKind::Conv)
            .map(|(i, _)| i)
            .collect()
    }

    /// Final output side length (validated networks always have one).
    pub fn final_ofm(&self) -> usize {
        self.layers.last().and_then(LayerSpec::ofm).unwrap_or(0)
    }
}
