//! Online signed-digit addition.

use crate::msdf::digit::SignedDigit;
use crate::msdf::stream::DigitStream;
use crate::msdf::MsdfError;

/// Input digits consumed before the first sum digit is available.
pub const ONLINE_ADD_DELAY: u32 = 2;

/// Adds two equal-length digit streams, emitting `(a + b) / 2`.
///
/// The half-scaling keeps the sum of two (-1, 1) operands inside the
/// fractional range, so adders compose into trees without overflow; callers
/// track the accumulated scale. The output carries `len + 2` digits and its
/// first digit depends on two input positions, giving an online delay of 2.
///
/// Digit selection works on position sums `p_i = a_i + b_i` in {-2..2}. Each
/// position forms a transfer `t_i` into the next weight up and an interim
/// digit `w_i`, with `p_i = 2 t_i + w_i`. For |p_i| = 1 the split is chosen
/// by the sign of the next position sum so that `w_i + t_(i+1)` stays in
/// {-1, 0, 1}.
pub fn online_add(a: &DigitStream, b: &DigitStream) -> Result<DigitStream, MsdfError> {
    if a.len() != b.len() {
        return Err(MsdfError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let len = a.len();
    // p[i] holds the position sum for weight 2^-(i+1); two zero positions
    // drain the final transfers.
    let p: Vec<i64> = (0..len + 2)
        .map(|i| {
            if i < len {
                a.digit(i).value() + b.digit(i).value()
            } else {
                0
            }
        })
        .collect();

    let split = |i: usize| -> (i64, i64) {
        let next_non_negative = p[i + 1] >= 0;
        match p[i] {
            2 => (1, 0),
            1 if next_non_negative => (1, -1),
            1 => (0, 1),
            0 => (0, 0),
            -1 if next_non_negative => (0, -1),
            -1 => (-1, 1),
            -2 => (-1, 0),
            _ => unreachable!("position sum out of range"),
        }
    };

    let mut t = vec![0i64; len + 2];
    let mut w = vec![0i64; len + 1];
    for i in 0..len + 1 {
        let (ti, wi) = split(i);
        t[i] = ti;
        w[i] = wi;
    }

    // Halving the sum shifts every weight down by one: the transfer out of
    // the top position becomes the first output digit.
    let mut digits = Vec::with_capacity(len + 2);
    digits.push(SignedDigit::from_value(t[0]).expect("transfer in range"));
    for i in 0..len + 1 {
        let s = w[i] + t[i + 1];
        digits.push(SignedDigit::from_value(s).expect("sum digit in range"));
    }
    Ok(DigitStream::new(digits, a.start().max(b.start()) + ONLINE_ADD_DELAY))
}
