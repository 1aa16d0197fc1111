//! Tile planning for fused pyramids: pick one tile count that works at
//! every level so tiles march through all fused layers in lockstep.
//!
//! A pyramid is a prefix of the network through the q-th convolution plus
//! any pooling layers that immediately follow it. A tile plan fixes, per
//! level, the square tile side `h` and the stride `tile_stride` between
//! consecutive tile origins; `alpha` tiles per axis cover the whole map.

use crate::net::{LayerKind, NetworkSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("q = {q} but the network has {convs} convolution layers")]
    BadQuery { q: usize, convs: usize },
    #[error("region {region} outside 1..={max} for this pyramid")]
    BadRegion { region: usize, max: usize },
    #[error("no tile count divides every level's span for region {region}")]
    NoCommonAlpha { region: usize },
    #[error(
        "region {region}: every candidate tile count ({candidates:?}) leaves gaps at some level"
    )]
    CoverageExhausted { region: usize, candidates: Vec<usize> },
}

/// Layer indices forming the fused pyramid for the first `q` convolutions.
pub fn pyramid_levels(net: &NetworkSpec, q: usize) -> Result<Vec<usize>, PlanError> {
    let convs = net.conv_indices();
    if q == 0 || q > convs.len() {
        return Err(PlanError::BadQuery { q, convs: convs.len() });
    }
    let mut end = convs[q - 1] + 1;
    while end < net.layers.len() && net.layers[end].kind == LayerKind::Pool {
        end += 1;
    }
    Ok((0..end).collect())
}

/// Required tile side at every pyramid level to produce one `region x region`
/// patch of the pyramid's final output, walking the shape map backward.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileRow {
    pub region: usize,
    pub h: Vec<usize>,
}

/// All feasible rows, one per region size that fits inside the input maps.
pub fn tile_sizes(net: &NetworkSpec, q: usize) -> Result<Vec<TileRow>, PlanError> {
    let levels = pyramid_levels(net, q)?;
    let last = &net.layers[*levels.last().unwrap()];
    let max_region = last.ofm().unwrap_or(0);
    let mut rows = Vec::new();
    'regions: for region in 1..=max_region {
        let mut h = vec![0; levels.len()];
        let mut out = region;
        for (&idx, slot) in levels.iter().zip(&mut h).rev() {
            let l = &net.layers[idx];
            let hin = (out - 1) * l.s + l.k;
            if hin > l.ifm {
                continue 'regions;
            }
            *slot = hin;
            out = hin;
        }
        rows.push(TileRow { region, h });
    }
    Ok(rows)
}

/// Tile counts per axis that march a side-`h` tile across a side-`ifm` map
/// with an integral stride, ascending. A tile count `a` needs a stride
/// `(ifm - h) / (a - 1)`; the full map is the single `a = 1` tile.
pub fn level_tile_counts(ifm: usize, h: usize) -> Vec<usize> {
    let diff = ifm - h;
    if diff == 0 {
        return vec![1];
    }
    let mut alphas: Vec<usize> = (1..=diff.min(h))
        .filter(|p| diff.is_multiple_of(*p))
        .map(|p| diff / p + 1)
        .collect();
    alphas.sort_unstable();
    alphas
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelPlan {
    /// Index into the network's layer list.
    pub layer: usize,
    /// Input map side at this level.
    pub ifm: usize,
    /// Tile side at this level.
    pub h: usize,
    /// Stride between consecutive tile origins.
    pub tile_stride: usize,
    /// Re-read input columns between neighbouring tiles.
    pub overlap: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionPlan {
    pub network: String,
    pub q: usize,
    pub region: usize,
    /// Tiles per axis, shared by every level.
    pub alpha: usize,
    /// Side of the pyramid's final output map.
    pub out_side: usize,
    /// Stride between consecutive tiles' output regions.
    pub out_stride: usize,
    pub levels: Vec<LevelPlan>,
}

impl FusionPlan {
    /// `(start, end)` input column ranges of each tile at one level; the
    /// last tile always ends flush with the map edge.
    pub fn tile_indices(&self, level: usize) -> Vec<(usize, usize)> {
        let l = &self.levels[level];
        (0..self.alpha)
            .map(|t| (t * l.tile_stride, t * l.tile_stride + l.h))
            .collect()
    }
}

/// Picks the smallest tile count valid at every level of the row's pyramid.
///
/// Valid means: the level stride is integral (enumerated per level, then
/// intersected) and no output pixel falls between tiles, i.e. the stride
/// never exceeds `h - k + s` at any level. The pyramid's output map joins
/// the intersection as a virtual unit-kernel level so tile outputs stay
/// aligned to the final layer's own stride and tile the output exactly.
pub fn select_uniform_plan(
    net: &NetworkSpec,
    q: usize,
    row: &TileRow,
) -> Result<FusionPlan, PlanError> {
    let levels = pyramid_levels(net, q)?;
    let out_side = net.layers[*levels.last().unwrap()].ofm().unwrap();
    let mut common = level_tile_counts(out_side, row.region);
    for (&idx, &h) in levels.iter().zip(&row.h) {
        let alphas = level_tile_counts(net.layers[idx].ifm, h);
        common.retain(|a| alphas.contains(a));
    }
    if common.is_empty() {
        return Err(PlanError::NoCommonAlpha { region: row.region });
    }

    for &alpha in &common {
        let mut plan_levels = Vec::with_capacity(levels.len());
        let mut ok = true;
        for (&idx, &h) in levels.iter().zip(&row.h) {
            let l = &net.layers[idx];
            let stride = if alpha == 1 { h } else { (l.ifm - h) / (alpha - 1) };
            if alpha > 1 && stride > h - l.k + l.s {
                ok = false;
                break;
            }
            plan_levels.push(LevelPlan {
                layer: idx,
                ifm: l.ifm,
                h,
                tile_stride: stride,
                overlap: if alpha == 1 { 0 } else { h - stride },
            });
        }
        if ok {
            let out_stride = if alpha == 1 {
                row.region
            } else {
                (out_side - row.region) / (alpha - 1)
            };
            return Ok(FusionPlan {
                network: net.name.clone(),
                q,
                region: row.region,
                alpha,
                out_side,
                out_stride,
                levels: plan_levels,
            });
        }
    }
    Err(PlanError::CoverageExhausted { region: row.region, candidates: common })
}

/// Plans the fused pyramid of the first `q` convolutions for one region size.
pub fn plan(net: &NetworkSpec, q: usize, region: usize) -> Result<FusionPlan, PlanError> {
    let rows = tile_sizes(net, q)?;
    let row = rows
        .iter()
        .find(|r| r.region == region)
        .ok_or(PlanError::BadRegion { region, max: rows.last().map_or(0, |r| r.region) })?;
    select_uniform_plan(net, q, row)
}
