//! Flat binary container for feature maps and convolution weights.
//!
//! Layout, all little-endian:
//!
//! | bytes | field     |                                      |
//! |-------|-----------|--------------------------------------|
//! | 0..4  | magic     | `FXT1`                               |
//! | 4..6  | precision | u16, fractional bits per value       |
//! | 6..8  | channels  | u16                                  |
//! | 8..12 | height    | u32                                  |
//! | 12..16| width     | u32                                  |
//! | 16..  | values    | channels * height * width raws       |
//!
//! Each raw is `value * 2^precision` stored as a two's-complement integer
//! of `ceil((precision + 1) / 8)` bytes; one sign bit on top of the
//! `precision` magnitude bits keeps the whole open interval (-1, 1)
//! addressable. Values outside that interval are rejected on both paths.
//! Body order is channel-major: plane by plane, each plane row-major.
//!
//! Weight files reuse the container with `channels = m_out * n_in`
//! (output-filter major) and `height = width = k`.

use std::io::{Read, Write};

use thiserror::Error;

use crate::fixed::Fx;
use crate::sim::{FeatureMap, LayerWeights};

pub const MAGIC: [u8; 4] = *b"FXT1";

/// Widest precision the container accepts; raws must fit an i64 with room
/// for the sign bit.
pub const MAX_PRECISION: u16 = 62;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic {found:02x?}, expected 46 58 54 31 (`FXT1`)")]
    BadMagic { found: [u8; 4] },
    #[error("precision {0} is outside 1..={MAX_PRECISION}")]
    BadPrecision(u16),
    #[error("raster is {h}x{w} but maps and kernels are square")]
    NotSquare { h: u32, w: u32 },
    #[error("{channels} channels do not fit the container's 16-bit channel count")]
    TooManyChannels { channels: usize },
    #[error("value at (c={c}, y={y}, x={x}) is not on the 2^-{precision} grid")]
    NotRepresentable { c: usize, y: usize, x: usize, precision: u16 },
    #[error("value {value} at flat index {index} lies outside the open unit interval")]
    OutOfRange { index: usize, value: f64 },
    #[error(
        "weight raster has {channels} planes of side {side} but the layer \
         wants {m_out}x{n_in} filters of side {k}"
    )]
    WeightShape { channels: usize, side: u32, m_out: usize, n_in: usize, k: usize },
}

fn bytes_per_value(precision: u16) -> usize {
    (precision as usize + 1).div_ceil(8)
}

fn check_precision(precision: u16) -> Result<(), RasterError> {
    if precision == 0 || precision > MAX_PRECISION {
        return Err(RasterError::BadPrecision(precision));
    }
    Ok(())
}

fn write_header(
    w: &mut impl Write,
    precision: u16,
    channels: usize,
    h: u32,
    wd: u32,
) -> Result<(), RasterError> {
    check_precision(precision)?;
    let channels =
        u16::try_from(channels).map_err(|_| RasterError::TooManyChannels { channels })?;
    w.write_all(&MAGIC)?;
    w.write_all(&precision.to_le_bytes())?;
    w.write_all(&channels.to_le_bytes())?;
    w.write_all(&h.to_le_bytes())?;
    w.write_all(&wd.to_le_bytes())?;
    Ok(())
}

struct Header {
    precision: u16,
    channels: usize,
    h: u32,
    w: u32,
}

fn read_header(r: &mut impl Read) -> Result<Header, RasterError> {
    let mut buf = [0u8; 16];
    r.read_exact(&mut buf)?;
    if buf[..4] != MAGIC {
        return Err(RasterError::BadMagic { found: [buf[0], buf[1], buf[2], buf[3]] });
    }
    let precision = u16::from_le_bytes([buf[4], buf[5]]);
    check_precision(precision)?;
    Ok(Header {
        precision,
        channels: u16::from_le_bytes([buf[6], buf[7]]) as usize,
        h: u32::from_le_bytes([buf[8], buf[9], buf[10], buf[11]]),
        w: u32::from_le_bytes([buf[12], buf[13], buf[14], buf[15]]),
    })
}

fn write_raw(w: &mut impl Write, raw: i64, width: usize) -> Result<(), RasterError> {
    w.write_all(&raw.to_le_bytes()[..width])?;
    Ok(())
}

fn read_raw(r: &mut impl Read, width: usize) -> Result<i64, RasterError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf[..width])?;
    let shift = 64 - 8 * width as u32;
    Ok((i64::from_le_bytes(buf) << shift) >> shift)
}

fn check_raw(raw: i64, precision: u16, index: usize) -> Result<i64, RasterError> {
    let bound = 1i64 << precision;
    if raw <= -bound || raw >= bound {
        return Err(RasterError::OutOfRange {
            index,
            value: raw as f64 / bound as f64,
        });
    }
    Ok(raw)
}

/// Writes a feature map quantized to `precision` fractional bits. Every
/// value must already sit on that grid and inside (-1, 1).
pub fn write_feature_map(
    w: &mut impl Write,
    map: &FeatureMap,
    precision: u16,
) -> Result<(), RasterError> {
    let side = map.side() as u32;
    write_header(w, precision, map.channels(), side, side)?;
    let width = bytes_per_value(precision);
    for (i, v) in map.values().iter().enumerate() {
        let raw = v.to_fixed(precision as u32).ok_or_else(|| {
            let per = map.side() * map.side();
            RasterError::NotRepresentable {
                c: i / per,
                y: i % per / map.side(),
                x: i % map.side(),
                precision,
            }
        })?;
        write_raw(w, check_raw(raw as i64, precision, i)?, width)?;
    }
    Ok(())
}

/// Reads a feature map, returning it with the file's precision.
pub fn read_feature_map(r: &mut impl Read) -> Result<(FeatureMap, u16), RasterError> {
    let hd = read_header(r)?;
    if hd.h != hd.w {
        return Err(RasterError::NotSquare { h: hd.h, w: hd.w });
    }
    let side = hd.h as usize;
    let width = bytes_per_value(hd.precision);
    let mut raws = Vec::with_capacity(hd.channels * side * side);
    for i in 0..hd.channels * side * side {
        raws.push(check_raw(read_raw(r, width)?, hd.precision, i)?);
    }
    let map = FeatureMap::from_fn(side, hd.channels, |c, y, x| {
        Fx::from_fixed(raws[(c * side + y) * side + x], hd.precision as u32)
    });
    Ok((map, hd.precision))
}

/// Writes one convolution layer's weights; the container carries
/// `m_out * n_in` planes of side `k` at the weights' own precision.
pub fn write_weights(w: &mut impl Write, lw: &LayerWeights) -> Result<(), RasterError> {
    let precision =
        u16::try_from(lw.frac_bits).map_err(|_| RasterError::BadPrecision(u16::MAX))?;
    write_header(w, precision, lw.m_out * lw.n_in, lw.k as u32, lw.k as u32)?;
    let width = bytes_per_value(precision);
    for (i, &raw) in lw.raw.iter().enumerate() {
        write_raw(w, check_raw(raw, precision, i)?, width)?;
    }
    Ok(())
}

/// Reads weights for a layer expecting `m_out` filters over `n_in`
/// channels; the kernel side and precision come from the file.
pub fn read_weights(
    r: &mut impl Read,
    m_out: usize,
    n_in: usize,
) -> Result<LayerWeights, RasterError> {
    let hd = read_header(r)?;
    if hd.h != hd.w {
        return Err(RasterError::NotSquare { h: hd.h, w: hd.w });
    }
    if hd.channels != m_out * n_in {
        return Err(RasterError::WeightShape {
            channels: hd.channels,
            side: hd.h,
            m_out,
            n_in,
            k: hd.h as usize,
        });
    }
    let k = hd.h as usize;
    let width = bytes_per_value(hd.precision);
    let mut raw = Vec::with_capacity(hd.channels * k * k);
    for i in 0..hd.channels * k * k {
        raw.push(check_raw(read_raw(r, width)?, hd.precision, i)?);
    }
    Ok(LayerWeights { m_out, n_in, k, frac_bits: hd.precision as u32, raw })
}
