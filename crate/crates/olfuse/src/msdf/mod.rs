//! Most-significant-digit-first (online) signed-digit arithmetic.
//!
//! Operands stream one radix-2 signed digit per cycle, most significant
//! first, so downstream units can start after a small fixed delay instead of
//! waiting for complete words. The operators here are exact: at full
//! emission length the decoded outputs equal the true products and sums.

mod add;
mod digit;
mod mul;
mod stream;
mod tree;

pub use add::{online_add, ONLINE_ADD_DELAY};
pub use digit::SignedDigit;
pub use mul::{online_mul_sp, selm, ParallelOperand, ONLINE_MUL_DELAY};
pub use stream::DigitStream;
pub use tree::{reduce_tree, tree_depth, ScaledStream};


use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MsdfError {
    #[error("value is not an exact multiple of 2^-{frac_bits}")]
    NotRepresentable { frac_bits: u32 },
    #[error("operand magnitude must stay below 1")]
    OutOfRange,
    #[error("stream lengths differ ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("cannot emit {emit} digits; full precision is {max}")]
    EmitTooLong { emit: usize, max: usize },
    #[error("reduction over zero operands")]
    EmptyReduce,
    #[error("online delay {0} outside the supported 1..=4 range")]
    DelayOutOfRange(u32),
}

/// Declared online delays used by the timing models.
///
/// The functional units in this module have structural delays of 2; the
/// cost formulas accept other values for what-if analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OnlineDelays {
    pub mul: u32,
    pub add: u32,
}

impl OnlineDelays {
    pub fn new(mul: u32, add: u32) -> Result<OnlineDelays, MsdfError> {
        for d in [mul, add] {
            if !(1..=4).contains(&d) {
                return Err(MsdfError::DelayOutOfRange(d));
            }
        }
        Ok(OnlineDelays { mul, add })
    }
}

impl Default for OnlineDelays {
    fn default() -> OnlineDelays {
        OnlineDelays { mul: ONLINE_MUL_DELAY, add: ONLINE_ADD_DELAY }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_validation() {
        assert!(OnlineDelays::new(2, 2).is_ok());
        assert!(OnlineDelays::new(1, 4).is_ok());
        assert_eq!(OnlineDelays::new(0, 2), Err(MsdfError::DelayOutOfRange(0)));
        assert_eq!(OnlineDelays::new(2, 5), Err(MsdfError::DelayOutOfRange(5)));
        let d = OnlineDelays::default();
        assert_eq!((d.mul, d.add), (2, 2));
    }
}
