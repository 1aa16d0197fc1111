//! Activation and pooling over settled fixed-point grids.

use crate::fixed::{self, Fx};
use crate::sop::SopError;

/// Rectified linear unit.
pub fn relu(v: Fx) -> Fx {
    if v.is_negative() {
        fixed::ZERO
    } else {
        v
    }
}

/// Max pooling over one channel stored row major as a `side * side` grid.
///
/// Returns the pooled grid and its side length. The geometry must tile
/// exactly: `(side - k) % s == 0`.
pub fn maxpool(values: &[Fx], side: usize, k: usize, s: usize) -> Result<(Vec<Fx>, usize), SopError> {
    if values.len() != side * side {
        return Err(SopError::ShapeMismatch {
            expected: side * side,
            found: values.len(),
        });
    }
    if k == 0 || s == 0 || side < k || !(side - k).is_multiple_of(s) {
        return Err(SopError::BadPoolGeometry { side, k, s });
    }
    let out_side = (side - k) / s + 1;
    let mut out = Vec::with_capacity(out_side * out_side);
    for oy in 0..out_side {
        for ox in 0..out_side {
            let mut best = values[oy * s * side + ox * s];
            for dy in 0..k {
                for dx in 0..k {
                    best = best.max(values[(oy * s + dy) * side + ox * s + dx]);
                }
            }
            out.push(best);
        }
    }
    Ok((out, out_side))
}
