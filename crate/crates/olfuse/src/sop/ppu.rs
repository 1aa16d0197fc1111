//! Pixel processing: sum over input channels plus early negative detection.

use crate::fixed::Fx;
use crate::msdf::{reduce_tree, ScaledStream};
use crate::sop::end::{run_end, EndStatus};
use crate::sop::wpu::{wpu_spatial, wpu_temporal, Kernel, Window};
use crate::sop::SopError;

/// Which window-unit schedule produces the per-channel partial sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WpuKind {
    /// K^2 multipliers in parallel, digit-serial throughout.
    Spatial,
    /// One multiplier reused K^2 times, then a serial re-emission.
    Temporal,
}

/// One convolution output pixel, before any activation is applied.
#[derive(Clone, Debug)]
pub struct PixelResult {
    /// Decoded value of the emitted stream, scale folded in.
    pub value: Fx,
    /// Sign classification of the emitted stream.
    pub status: EndStatus,
    /// Digits a terminating monitor consumes (= stream length when the
    /// stream never dips negative).
    pub consumed: u32,
    /// Digits emitted without the monitor.
    pub stream_len: u32,
    /// log2 of the factor folded out by the reduction trees.
    pub log2_scale: u32,
}

/// Computes one output pixel: per-channel window products reduced across
/// channels, optionally truncated to `emit` digits before decoding.
///
/// The sign monitor always runs over the emitted stream; callers decide
/// whether its consumption count or the full length is charged. When the
/// monitor terminates, the decoded value is strictly negative, so a
/// rectifier stores exactly zero either way.
pub fn ppu_compute(
    windows: &[Window],
    kernels: &[Kernel],
    kind: WpuKind,
    emit: Option<usize>,
) -> Result<PixelResult, SopError> {
    if windows.is_empty() || windows.len() != kernels.len() {
        return Err(SopError::ChannelMismatch {
            windows: windows.len(),
            kernels: kernels.len(),
        });
    }
    let per_channel: Vec<ScaledStream> = windows
        .iter()
        .zip(kernels)
        .map(|(w, k)| match kind {
            WpuKind::Spatial => {
                let full = w.pixel_len() + k.frac_bits() as usize;
                wpu_spatial(w, k, full)
            }
            WpuKind::Temporal => wpu_temporal(w, k),
        })
        .collect::<Result<_, _>>()?;

    let channel_scale = per_channel[0].log2_scale;
    let streams: Vec<_> = per_channel.into_iter().map(|s| s.stream).collect();
    let reduced = reduce_tree(&streams)?;
    let log2_scale = channel_scale + reduced.log2_scale;

    let mut stream = reduced.stream;
    if let Some(e) = emit {
        stream = stream.truncate(e);
    }
    let (status, consumed) = run_end(stream.digits());
    let value = stream.decode().mul_pow2(log2_scale);
    Ok(PixelResult {
        value,
        status,
        consumed,
        stream_len: stream.len() as u32,
        log2_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::{self, Fx};
    use crate::msdf::{tree_depth, DigitStream, ParallelOperand};
    use crate::sop::wpu::inner_product;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channels(
        rng: &mut ChaCha8Rng,
        n_ch: usize,
        k: usize,
        n: u32,
        scale_shift: u32,
    ) -> (Vec<Window>, Vec<Kernel>) {
        let bound = 1i64 << (n - scale_shift);
        let mut windows = Vec::new();
        let mut kernels = Vec::new();
        for _ in 0..n_ch {
            let pixels = (0..k * k)
                .map(|_| {
                    let raw = rng.gen_range(-bound + 1..bound);
                    DigitStream::encode_fixed(Fx::from_fixed(raw, n), n).unwrap()
                })
                .collect();
            let weights = (0..k * k)
                .map(|_| ParallelOperand::new(rng.gen_range(-bound + 1..bound), n).unwrap())
                .collect();
            windows.push(Window::new(k, pixels).unwrap());
            kernels.push(Kernel::new(k, weights).unwrap());
        }
        (windows, kernels)
    }

    fn exact_sop(windows: &[Window], kernels: &[Kernel]) -> Fx {
        windows
            .iter()
            .zip(kernels)
            .fold(fixed::ZERO, |acc, (w, k)| acc + inner_product(w, k).unwrap())
    }

    #[test]
    fn untruncated_pixel_is_exact_for_both_schedules() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &(n_ch, k) in &[(1usize, 1usize), (1, 3), (3, 3), (6, 5)] {
            for kind in [WpuKind::Spatial, WpuKind::Temporal] {
                let (ws, ks) = random_channels(&mut rng, n_ch, k, 8, 4);
                let out = ppu_compute(&ws, &ks, kind, None).unwrap();
                assert_eq!(out.value, exact_sop(&ws, &ks), "ch={n_ch} k={k} {kind:?}");
                let expect_scale = tree_depth(k * k) + tree_depth(n_ch);
                assert_eq!(out.log2_scale, expect_scale);
            }
        }
    }

    #[test]
    fn truncation_error_stays_below_unit_in_last_place() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let n = 8u32;
            let (ws, ks) = random_channels(&mut rng, 4, 3, n, 4);
            let scale = tree_depth(9) + tree_depth(4);
            let emit = n as usize + scale as usize;
            let out = ppu_compute(&ws, &ks, WpuKind::Spatial, Some(emit)).unwrap();
            let err = (out.value - exact_sop(&ws, &ks)).abs();
            assert!(err < Fx::pow2_neg(n), "err {err} at n={n}");
            assert_eq!(out.stream_len as usize, emit);
        }
    }

    #[test]
    fn negative_quarter_terminates_within_three_digits() {
        // One channel, K = 1, x = 1/2, w = -1/2: the product stream starts
        // [-1, ...] decoding toward -1/4, so the monitor fires immediately.
        let x = DigitStream::encode_fixed(Fx::from_fixed(1 << 7, 8), 8).unwrap();
        let w = ParallelOperand::new(-(1 << 7), 8).unwrap();
        let windows = vec![Window::new(1, vec![x]).unwrap()];
        let kernels = vec![Kernel::new(1, vec![w]).unwrap()];
        let out = ppu_compute(&windows, &kernels, WpuKind::Spatial, None).unwrap();
        assert_eq!(out.value, Fx::from_fixed(-1, 2));
        match out.status {
            EndStatus::Terminated { cycle } => assert!(cycle <= 3, "cycle {cycle}"),
            other => panic!("expected termination, got {other:?}"),
        }
        assert!(out.consumed < out.stream_len);
    }

    #[test]
    fn all_zero_inputs_classify_undetermined() {
        let x = DigitStream::zeros(8, 0);
        let w = ParallelOperand::new(0, 8).unwrap();
        let windows = vec![Window::new(1, vec![x]).unwrap()];
        let kernels = vec![Kernel::new(1, vec![w]).unwrap()];
        let out = ppu_compute(&windows, &kernels, WpuKind::Spatial, None).unwrap();
        assert!(out.value.is_zero());
        assert_eq!(out.status, EndStatus::Undetermined);
        assert_eq!(out.consumed, out.stream_len);
    }

    #[test]
    fn channel_count_mismatch_rejected() {
        let x = DigitStream::zeros(8, 0);
        let w = ParallelOperand::new(0, 8).unwrap();
        let windows = vec![Window::new(1, vec![x]).unwrap()];
        let kernels = vec![
            Kernel::new(1, vec![w]).unwrap(),
            Kernel::new(1, vec![w]).unwrap(),
        ];
        assert!(matches!(
            ppu_compute(&windows, &kernels, WpuKind::Spatial, None),
            Err(SopError::ChannelMismatch { .. })
        ));
    }
}
