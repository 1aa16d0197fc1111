//! Online serial-parallel multiplication.

use crate::fixed::Fx;
use crate::msdf::digit::SignedDigit;
use crate::msdf::stream::DigitStream;
use crate::msdf::MsdfError;

/// Input digits consumed before the first product digit is available.
pub const ONLINE_MUL_DELAY: u32 = 2;

/// The fully-parallel multiplicand: `raw / 2^frac_bits`, |raw| < 2^frac_bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParallelOperand {
    raw: i64,
    frac_bits: u32,
}

impl ParallelOperand {
    pub fn new(raw: i64, frac_bits: u32) -> Result<ParallelOperand, MsdfError> {
        let bound = 1i64 << frac_bits;
        if raw <= -bound || raw >= bound {
            return Err(MsdfError::OutOfRange);
        }
        Ok(ParallelOperand { raw, frac_bits })
    }

    pub fn from_fx(v: Fx, frac_bits: u32) -> Result<ParallelOperand, MsdfError> {
        let raw = v
            .to_fixed(frac_bits)
            .ok_or(MsdfError::NotRepresentable { frac_bits })?;
        let raw = i64::try_from(raw).map_err(|_| MsdfError::OutOfRange)?;
        ParallelOperand::new(raw, frac_bits)
    }

    pub fn raw(&self) -> i64 {
        self.raw
    }

    pub fn frac_bits(&self) -> u32 {
        self.frac_bits
    }

    pub fn value(&self) -> Fx {
        Fx::from_fixed(self.raw, self.frac_bits)
    }
}

/// Output digit selection from the residual estimate.
///
/// `v_hat` is the recurrence value truncated (toward negative infinity) to
/// one integer and two fractional bits, passed here in units of 1/4. The
/// digit is 1 for estimates >= 1/2, -1 below -1/2, 0 between.
pub fn selm(v_hat_quarters: i64) -> SignedDigit {
    if v_hat_quarters >= 2 {
        SignedDigit::Plus
    } else if v_hat_quarters >= -2 {
        SignedDigit::Zero
    } else {
        SignedDigit::Minus
    }
}

/// Multiplies a digit-serial operand by a parallel operand, emitting `emit`
/// product digits after an online delay of 2.
///
/// Bookkeeping runs on the scaled residual `w * 2^(n+2)` (n the parallel
/// fraction width), which the recurrence keeps inside +-3/4 so every digit
/// choice can absorb the remaining error. With `emit = x.len() + n` the
/// decoded output equals the product exactly; shorter emissions are prefixes
/// of it, longer ones are rejected.
pub fn online_mul_sp(
    x: &DigitStream,
    y: ParallelOperand,
    emit: usize,
) -> Result<DigitStream, MsdfError> {
    let max = x.len() + y.frac_bits() as usize;
    if emit > max {
        return Err(MsdfError::EmitTooLong { emit, max });
    }
    let (stream, _) = mul_tracked(x, y, emit);
    Ok(stream)
}

/// Core recurrence; also reports the largest |residual| reached, scaled by
/// `2^(n+2)`, so tests can pin the boundedness invariant.
pub(crate) fn mul_tracked(
    x: &DigitStream,
    y: ParallelOperand,
    emit: usize,
) -> (DigitStream, i64) {
    let n = y.frac_bits();
    let den = 1i64 << (n + 2);
    let x_digit = |k: usize| -> i64 {
        // 1-based input index; zero once the stream is exhausted.
        if k >= 1 && k <= x.len() {
            x.digit(k - 1).value()
        } else {
            0
        }
    };

    let mut w: i64 = 0;
    let mut max_w: i64 = 0;
    // Two initialization steps accumulate x_1 and x_2 without output.
    for k in 1..=2usize {
        w = 2 * w + x_digit(k) * y.raw();
    }

    let mut digits = Vec::with_capacity(emit);
    for j in 0..emit {
        let v = 2 * w + x_digit(j + 3) * y.raw();
        let z = selm(v >> n);
        digits.push(z);
        w = v - z.value() * den;
        debug_assert!(w.abs() <= 3 * den / 4, "residual bound violated");
        max_w = max_w.max(w.abs());
    }
    (
        DigitStream::new(digits, x.start() + ONLINE_MUL_DELAY),
        max_w,
    )
}
