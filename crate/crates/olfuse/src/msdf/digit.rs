//! Radix-2 signed digits.

use serde::{Deserialize, Serialize};

/// One digit of a redundant signed-digit number, value in {-1, 0, 1}.
///
/// Hardware carries a digit as a (plus, minus) bit pair; the (1, 1)
/// combination is never produced, which the enum makes unrepresentable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignedDigit {
    Minus,
    Zero,
    Plus,
}

impl SignedDigit {
    pub fn value(self) -> i64 {
        match self {
            SignedDigit::Minus => -1,
            SignedDigit::Zero => 0,
            SignedDigit::Plus => 1,
        }
    }

    pub fn from_value(v: i64) -> Option<SignedDigit> {
        match v {
            -1 => Some(SignedDigit::Minus),
            0 => Some(SignedDigit::Zero),
            1 => Some(SignedDigit::Plus),
            _ => None,
        }
    }

    /// The (plus, minus) wire pair.
    pub fn bits(self) -> (u8, u8) {
        match self {
            SignedDigit::Minus => (0, 1),
            SignedDigit::Zero => (0, 0),
            SignedDigit::Plus => (1, 0),
        }
    }

    pub fn negate(self) -> SignedDigit {
        match self {
            SignedDigit::Minus => SignedDigit::Plus,
            SignedDigit::Zero => SignedDigit::Zero,
            SignedDigit::Plus => SignedDigit::Minus,
        }
    }
}
