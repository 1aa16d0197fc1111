//! Window processing: K x K inner products over digit streams.

use crate::fixed::{self, Fx};
use crate::msdf::{
    online_mul_sp, reduce_tree, tree_depth, DigitStream, ParallelOperand, ScaledStream,
};
use crate::sop::SopError;

/// A K x K patch of serialized activations, row major.
#[derive(Clone, Debug)]
pub struct Window {
    k: usize,
    pixels: Vec<DigitStream>,
}

impl Window {
    pub fn new(k: usize, pixels: Vec<DigitStream>) -> Result<Window, SopError> {
        if k == 0 || pixels.len() != k * k {
            return Err(SopError::ShapeMismatch {
                expected: k * k,
                found: pixels.len(),
            });
        }
        let len = pixels[0].len();
        if pixels.iter().any(|p| p.len() != len) {
            return Err(SopError::RaggedWindow);
        }
        Ok(Window { k, pixels })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pixels(&self) -> &[DigitStream] {
        &self.pixels
    }

    pub fn pixel_len(&self) -> usize {
        self.pixels[0].len()
    }
}

/// The matching K x K weight patch, fully parallel.
#[derive(Clone, Debug)]
pub struct Kernel {
    k: usize,
    weights: Vec<ParallelOperand>,
}

impl Kernel {
    pub fn new(k: usize, weights: Vec<ParallelOperand>) -> Result<Kernel, SopError> {
        if k == 0 || weights.len() != k * k {
            return Err(SopError::ShapeMismatch {
                expected: k * k,
                found: weights.len(),
            });
        }
        Ok(Kernel { k, weights })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &[ParallelOperand] {
        &self.weights
    }

    pub fn frac_bits(&self) -> u32 {
        self.weights[0].frac_bits()
    }
}

fn check_pair(window: &Window, kernel: &Kernel) -> Result<(), SopError> {
    if window.k != kernel.k {
        return Err(SopError::ShapeMismatch {
            expected: window.k * window.k,
            found: kernel.k * kernel.k,
        });
    }
    Ok(())
}

/// Spatial window unit: K^2 concurrent multipliers feeding a reduction tree.
///
/// `emit` is the digit count requested from each multiplier; at
/// `window.pixel_len() + kernel.frac_bits()` the result is exact. The output
/// decodes to the inner product scaled by `2^-ceil(log2 K^2)`.
pub fn wpu_spatial(
    window: &Window,
    kernel: &Kernel,
    emit: usize,
) -> Result<ScaledStream, SopError> {
    check_pair(window, kernel)?;
    let products: Vec<DigitStream> = window
        .pixels
        .iter()
        .zip(&kernel.weights)
        .map(|(x, &y)| online_mul_sp(x, y, emit))
        .collect::<Result<_, _>>()?;
    Ok(reduce_tree(&products)?)
}

/// Temporal window unit: one multiplier reused K^2 times.
///
/// Each product runs to completion, is captured in an activation register,
/// and is accumulated; the settled sum is then re-emitted digit serially.
/// The value equals the spatial unit's output, same scale, but through a
/// fully sequential schedule (the throughput difference is the timing
/// model's concern, not this function's).
pub fn wpu_temporal(window: &Window, kernel: &Kernel) -> Result<ScaledStream, SopError> {
    check_pair(window, kernel)?;
    let sum = window
        .pixels
        .iter()
        .zip(&kernel.weights)
        .fold(fixed::ZERO, |acc, (x, y)| acc + x.decode() * y.value());
    let depth = tree_depth(window.k * window.k);
    let frac = window.pixel_len() as u32 + kernel.frac_bits() + depth;
    let stream = DigitStream::encode_fixed(sum.div_pow2(depth), frac)?;
    Ok(ScaledStream { stream, log2_scale: depth })
}

/// Exact inner product of a window and kernel, for reference checks.
pub fn inner_product(window: &Window, kernel: &Kernel) -> Result<Fx, SopError> {
    check_pair(window, kernel)?;
    Ok(window
        .pixels
        .iter()
        .zip(&kernel.weights)
        .fold(fixed::ZERO, |acc, (x, y)| acc + x.decode() * y.value()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msdf::{ONLINE_ADD_DELAY, ONLINE_MUL_DELAY};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng, k: usize, n: u32) -> (Window, Kernel) {
        let bound = 1i64 << n;
        let pixels = (0..k * k)
            .map(|_| {
                let raw = rng.gen_range(-bound + 1..bound);
                DigitStream::encode_fixed(Fx::from_fixed(raw, n), n).unwrap()
            })
            .collect();
        let weights = (0..k * k)
            .map(|_| ParallelOperand::new(rng.gen_range(-bound + 1..bound), n).unwrap())
            .collect();
        (Window::new(k, pixels).unwrap(), Kernel::new(k, weights).unwrap())
    }

    #[test]
    fn spatial_matches_exact_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for k in [1usize, 3, 5] {
            for _ in 0..100 {
                let n = 8u32;
                let (w, kr) = random_pair(&mut rng, k, n);
                let out = wpu_spatial(&w, &kr, 2 * n as usize).unwrap();
                assert_eq!(out.log2_scale, tree_depth(k * k));
                assert_eq!(out.value(), inner_product(&w, &kr).unwrap(), "k={k}");
            }
        }
    }

    #[test]
    fn k1_is_a_single_multiplier() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (w, kr) = random_pair(&mut rng, 1, 8);
        let out = wpu_spatial(&w, &kr, 16).unwrap();
        let direct = online_mul_sp(&w.pixels()[0], kr.weights()[0], 16).unwrap();
        assert_eq!(out.log2_scale, 0);
        assert_eq!(out.stream, direct);
    }

    #[test]
    fn temporal_equals_spatial_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for k in [1usize, 2, 3, 5] {
            for _ in 0..50 {
                let n = 8u32;
                let (w, kr) = random_pair(&mut rng, k, n);
                let spatial = wpu_spatial(&w, &kr, 2 * n as usize).unwrap();
                let temporal = wpu_temporal(&w, &kr).unwrap();
                assert_eq!(spatial.log2_scale, temporal.log2_scale);
                assert_eq!(spatial.value(), temporal.value(), "k={k}");
            }
        }
    }

    #[test]
    fn first_digit_delay_is_mul_plus_tree_fill() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for k in [1usize, 3, 5] {
            let (w, kr) = random_pair(&mut rng, k, 8);
            let out = wpu_spatial(&w, &kr, 16).unwrap();
            let expect = ONLINE_MUL_DELAY + ONLINE_ADD_DELAY * tree_depth(k * k);
            assert_eq!(out.stream.start(), expect, "k={k}");
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let (w3, _) = random_pair(&mut rng, 3, 8);
        let (_, k5) = random_pair(&mut rng, 5, 8);
        assert!(matches!(
            wpu_spatial(&w3, &k5, 16),
            Err(SopError::ShapeMismatch { .. })
        ));
        assert!(Window::new(2, vec![DigitStream::zeros(4, 0)]).is_err());
    }
}
