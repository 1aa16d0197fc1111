//! Cycle, throughput, and memory-traffic models for fused pyramids.
//!
//! Per tile step, a convolution level costs a pipeline fill `F` plus the
//! digits it must emit beyond the payload, `G`; pooling levels cost a fixed
//! comparison latency; one payload of `n` digits drains at the end. The
//! whole tile grid multiplies the step by `alpha^2`.

use crate::fusion::FusionPlan;
use crate::msdf::OnlineDelays;
use crate::net::{LayerKind, LayerSpec, NetworkSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Window-unit arrangement: all K^2 products at once, or one multiplier
/// reused K^2 times per window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    Spatial,
    Temporal,
}

impl std::fmt::Display for Design {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Design::Spatial => "spatial",
            Design::Temporal => "temporal",
        })
    }
}

impl std::str::FromStr for Design {
    type Err = String;

    fn from_str(s: &str) -> Result<Design, String> {
        match s {
            "spatial" | "ds1" => Ok(Design::Spatial),
            "temporal" | "ds2" => Ok(Design::Temporal),
            other => Err(format!("unknown design '{other}' (ds1|spatial|ds2|temporal)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleParams {
    pub delays: OnlineDelays,
    /// Payload digits per stored activation.
    pub n: u32,
    /// Accumulator latency per reused-multiplier product.
    pub acc: u64,
    /// Comparison latency of a pooling level per tile step.
    pub mp: u64,
    pub freq_hz: f64,
}

impl Default for CycleParams {
    fn default() -> CycleParams {
        CycleParams {
            delays: OnlineDelays::default(),
            n: 8,
            acc: 1,
            mp: 2,
            freq_hz: 100e6,
        }
    }
}

#[derive(Debug, Error)]
pub enum CostError {
    #[error("layer {layer} is a pooling layer and performs no multiply-accumulates")]
    NoMacsInPool { layer: usize },
}

/// Smallest d with 2^d >= m. `ceil_log2(1) == 0`.
pub fn ceil_log2(m: u64) -> u32 {
    assert!(m >= 1);
    m.next_power_of_two().trailing_zeros()
}

/// Reduction-tree depths a convolution funnels through: over the window
/// and over the input channels.
pub fn tree_depths(l: &LayerSpec) -> (u32, u32) {
    (ceil_log2((l.k * l.k) as u64), ceil_log2(l.n_in as u64))
}

/// Pipeline fill of one convolution level: cycles before its first output
/// digit emerges.
pub fn conv_fill_cycles(design: Design, l: &LayerSpec, p: &CycleParams) -> u64 {
    let (dk, dn) = tree_depths(l);
    let mul = p.delays.mul as u64;
    let add = p.delays.add as u64;
    match design {
        Design::Spatial => mul + add * (dk + dn) as u64,
        Design::Temporal => {
            (mul + (p.n as u64 - 1) + p.acc) * (l.k * l.k) as u64 + add * dn as u64
        }
    }
}

/// Digits a convolution level emits beyond the payload: the scale burnt by
/// its reduction trees (the window tree is pre-settled in the reused-
/// multiplier arrangement).
pub fn conv_extra_digits(design: Design, l: &LayerSpec) -> u64 {
    let (dk, dn) = tree_depths(l);
    match design {
        Design::Spatial => (dk + dn) as u64,
        Design::Temporal => dn as u64,
    }
}

/// Multiply-accumulate count of one convolution layer.
pub fn num_ops(index: usize, l: &LayerSpec) -> Result<u64, CostError> {
    if l.kind != LayerKind::Conv {
        return Err(CostError::NoMacsInPool { layer: index });
    }
    let r = l.ofm().expect("validated layer") as u64;
    Ok(2 * (l.m_out as u64) * (l.n_in as u64) * r * r * (l.k * l.k) as u64)
}

/// Total multiply-accumulates over a plan's pyramid.
pub fn pyramid_ops(net: &NetworkSpec, plan: &FusionPlan) -> u64 {
    plan.levels
        .iter()
        .filter_map(|lp| num_ops(lp.layer, &net.layers[lp.layer]).ok())
        .sum()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelCycles {
    pub layer: usize,
    pub cycles: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CycleReport {
    pub design: Design,
    pub alpha: usize,
    /// Per-level cost inside one tile step (fill + extra digits, or pool).
    pub breakdown: Vec<LevelCycles>,
    /// Payload digits drained at the end of each step.
    pub payload: u64,
    pub step: u64,
    pub total: u64,
}

impl CycleReport {
    pub fn duration_secs(&self, p: &CycleParams) -> f64 {
        self.total as f64 / p.freq_hz
    }
}

/// Cycles to run one plan to completion, assuming tile steps run back to
/// back and each step drains before the next begins.
pub fn cycles(net: &NetworkSpec, plan: &FusionPlan, design: Design, p: &CycleParams) -> CycleReport {
    let mut breakdown = Vec::with_capacity(plan.levels.len());
    for lp in &plan.levels {
        let l = &net.layers[lp.layer];
        let cost = match l.kind {
            LayerKind::Conv => conv_fill_cycles(design, l, p) + conv_extra_digits(design, l),
            LayerKind::Pool => p.mp,
        };
        breakdown.push(LevelCycles { layer: lp.layer, cycles: cost });
    }
    let step = breakdown.iter().map(|b| b.cycles).sum::<u64>() + p.n as u64;
    let total = (plan.alpha * plan.alpha) as u64 * step;
    CycleReport {
        design,
        alpha: plan.alpha,
        breakdown,
        payload: p.n as u64,
        step,
        total,
    }
}

/// Billions of multiply-accumulates per second.
pub fn performance_gops(ops: u64, total_cycles: u64, freq_hz: f64) -> f64 {
    ops as f64 * freq_hz / total_cycles as f64 / 1e9
}

/// Where intermediate maps live: spilled per layer, or kept on chip for the
/// whole pyramid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficModel {
    LayerWise,
    Fused,
}

/// Off-chip bytes moved to run the plan's pyramid once.
///
/// Layer-wise, every level reads its input map and writes its output map.
/// Fused, only the first level's tiles stream in (overlap re-read), weights
/// load once, and the final map streams out.
pub fn dram_traffic(
    net: &NetworkSpec,
    plan: &FusionPlan,
    model: TrafficModel,
    p: &CycleParams,
) -> f64 {
    let bytes_per_val = p.n as f64 / 8.0;
    let weights: u64 = plan
        .levels
        .iter()
        .map(|lp| &net.layers[lp.layer])
        .filter(|l| l.kind == LayerKind::Conv)
        .map(|l| (l.m_out * l.n_in * l.k * l.k) as u64)
        .sum();
    let vals = match model {
        TrafficModel::LayerWise => {
            let maps: u64 = plan
                .levels
                .iter()
                .map(|lp| &net.layers[lp.layer])
                .map(|l| {
                    let ofm = l.ofm().expect("validated layer") as u64;
                    (l.ifm * l.ifm * l.n_in) as u64 + ofm * ofm * l.m_out as u64
                })
                .sum();
            maps + weights
        }
        TrafficModel::Fused => {
            let first = &plan.levels[0];
            let n_in = net.layers[first.layer].n_in as u64;
            let tiles_in = (plan.alpha * plan.alpha * first.h * first.h) as u64 * n_in;
            let last = &net.layers[plan.levels.last().unwrap().layer];
            let out = (plan.out_side * plan.out_side) as u64 * last.m_out as u64;
            tiles_in + weights + out
        }
    };
    vals as f64 * bytes_per_val
}

/// Multiply-accumulates per off-chip byte.
pub fn operational_intensity(ops: u64, bytes: f64) -> f64 {
    ops as f64 / bytes
}
