//! Exact settled-arithmetic reference model and weight/input generators.

use crate::fixed::{self, Fx};
use crate::net::{LayerKind, NetworkSpec};
use crate::sim::feature::FeatureMap;
use crate::sim::SimError;
use crate::sop::{maxpool, relu};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One convolution layer's weights as fixed-point raws at `frac_bits`,
/// indexed `[m][n][ky][kx]`, output-filter major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerWeights {
    pub m_out: usize,
    pub n_in: usize,
    pub k: usize,
    pub frac_bits: u32,
    pub raw: Vec<i64>,
}

impl LayerWeights {
    pub fn index(&self, m: usize, n: usize, ky: usize, kx: usize) -> usize {
        debug_assert!(m < self.m_out && n < self.n_in && ky < self.k && kx < self.k);
        ((m * self.n_in + n) * self.k + ky) * self.k + kx
    }

    pub fn get(&self, m: usize, n: usize, ky: usize, kx: usize) -> Fx {
        Fx::from_fixed(self.raw[self.index(m, n, ky, kx)], self.frac_bits)
    }

    /// Sum of |w| over one output filter, the value that bounds its
    /// sum-of-products magnitude.
    pub fn filter_l1(&self, m: usize) -> Fx {
        let per = self.n_in * self.k * self.k;
        self.raw[m * per..(m + 1) * per]
            .iter()
            .fold(fixed::ZERO, |acc, &r| acc + Fx::from_fixed(r.abs(), self.frac_bits))
    }
}

/// Weights for every convolution layer of a network (`None` at pools).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetWeights {
    pub layers: Vec<Option<LayerWeights>>,
}

impl NetWeights {
    /// Dense zero-mean uniform weights with every output filter's |w| sum
    /// strictly below one, so sums of products of sub-unit activations can
    /// never reach the stream format's limit. Each weight's amplitude is
    /// budgeted as (1/fan-in); if a draw still lands over budget, randomly
    /// chosen positions are zeroed until it fits (sign-blind, so the draw
    /// stays zero-mean). At low precision the budget can be unsatisfiable
    /// for a dense draw, which makes trimming the only terminating repair.
    /// `sparsity` zeroes that fraction of weights up front and re-spends
    /// their budget on the survivors.
    pub fn generate(net: &NetworkSpec, frac_bits: u32, seed: u64, sparsity: f64) -> NetWeights {
        assert!((0.0..1.0).contains(&sparsity));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1i64 << frac_bits;
        let layers = net
            .layers
            .iter()
            .map(|l| {
                if l.kind != LayerKind::Conv {
                    return None;
                }
                let fan_in = l.n_in * l.k * l.k;
                let active = ((fan_in as f64) * (1.0 - sparsity)).max(1.0);
                let bound = ((scale - 1) as f64 / active).floor().max(1.0) as i64;
                let per = fan_in;
                let mut raw = Vec::with_capacity(l.m_out * per);
                for _ in 0..l.m_out {
                    let mut filter: Vec<i64> = (0..per)
                        .map(|_| {
                            if sparsity > 0.0 && rng.gen::<f64>() < sparsity {
                                0
                            } else {
                                rng.gen_range(-bound..=bound)
                            }
                        })
                        .collect();
                    let mut l1: i64 = filter.iter().map(|r| r.abs()).sum();
                    if l1 >= scale {
                        let mut nonzero: Vec<usize> =
                            (0..per).filter(|&i| filter[i] != 0).collect();
                        while l1 >= scale {
                            let j = rng.gen_range(0..nonzero.len());
                            let idx = nonzero.swap_remove(j);
                            l1 -= filter[idx].abs();
                            filter[idx] = 0;
                        }
                    }
                    raw.extend(filter);
                }
                Some(LayerWeights {
                    m_out: l.m_out,
                    n_in: l.n_in,
                    k: l.k,
                    frac_bits,
                    raw,
                })
            })
            .collect();
        NetWeights { layers }
    }
}

/// Uniform activations in [0, 1) on the grid of `frac_bits`-bit values.
pub fn random_input(side: usize, channels: usize, frac_bits: u32, seed: u64) -> FeatureMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1i64 << frac_bits;
    FeatureMap::from_fn(side, channels, |_, _, _| {
        Fx::from_fixed(rng.gen_range(0..scale), frac_bits)
    })
}

/// Runs the pyramid levels with exact arithmetic, returning every level's
/// output map in order.
pub fn reference_forward(
    net: &NetworkSpec,
    levels: &[usize],
    weights: &NetWeights,
    input: &FeatureMap,
) -> Result<Vec<FeatureMap>, SimError> {
    let mut current = input.clone();
    let mut outs = Vec::with_capacity(levels.len());
    for &idx in levels {
        let l = &net.layers[idx];
        if current.side() != l.ifm || current.channels() != l.n_in {
            return Err(SimError::ShapeMismatch {
                layer: idx,
                expected: (l.ifm, l.n_in),
                found: (current.side(), current.channels()),
            });
        }
        let ofm = l.ofm().expect("validated layer");
        let next = match l.kind {
            LayerKind::Conv => {
                let w = weights.layers[idx].as_ref().ok_or(SimError::MissingWeights { layer: idx })?;
                FeatureMap::from_fn(ofm, l.m_out, |m, y, x| {
                    let mut acc = fixed::ZERO;
                    for n in 0..l.n_in {
                        for ky in 0..l.k {
                            for kx in 0..l.k {
                                acc = acc
                                    + current.get(n, y * l.s + ky, x * l.s + kx)
                                        * w.get(m, n, ky, kx);
                            }
                        }
                    }
                    if l.relu {
                        relu(acc)
                    } else {
                        acc
                    }
                })
            }
            LayerKind::Pool => {
                let mut out = FeatureMap::zeros(ofm, l.n_in);
                for c in 0..l.n_in {
                    let (pooled, side) = maxpool(current.plane(c), l.ifm, l.k, l.s)?;
                    debug_assert_eq!(side, ofm);
                    for y in 0..side {
                        for x in 0..side {
                            out.set(c, y, x, pooled[y * side + x]);
                        }
                    }
                }
                out
            }
        };
        outs.push(next.clone());
        current = next;
    }
    Ok(outs)
}
