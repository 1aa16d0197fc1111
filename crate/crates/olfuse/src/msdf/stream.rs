//! Most-significant-digit-first digit streams.

use crate::fixed::Fx;
use crate::msdf::digit::SignedDigit;
use crate::msdf::MsdfError;

/// A fractional signed-digit number delivered most significant digit first.
///
/// Digit `j` (1-based) has weight `2^-j`, so the represented value lies in
/// (-1, 1). `start` is the cycle, relative to the primary inputs of the
/// surrounding circuit, at which the first digit becomes available; online
/// operators propagate it so tests can assert delay bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DigitStream {
    digits: Vec<SignedDigit>,
    start: u32,
}

impl DigitStream {
    pub fn new(digits: Vec<SignedDigit>, start: u32) -> DigitStream {
        DigitStream { digits, start }
    }

    pub fn zeros(len: usize, start: u32) -> DigitStream {
        DigitStream { digits: vec![SignedDigit::Zero; len], start }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn digits(&self) -> &[SignedDigit] {
        &self.digits
    }

    pub fn digit(&self, i: usize) -> SignedDigit {
        self.digits[i]
    }

    /// Exact value of the whole stream.
    pub fn decode(&self) -> Fx {
        self.decode_prefix(self.digits.len())
    }

    /// Exact value of the first `p` digits.
    pub fn decode_prefix(&self, p: usize) -> Fx {
        let p = p.min(self.digits.len());
        let mut num: i128 = 0;
        for d in &self.digits[..p] {
            num = (num << 1) + d.value() as i128;
        }
        Fx::new(num, p as u32)
    }

    /// Prefix of length `p`, keeping the start cycle.
    pub fn truncate(&self, p: usize) -> DigitStream {
        DigitStream {
            digits: self.digits[..p.min(self.digits.len())].to_vec(),
            start: self.start,
        }
    }

    /// Canonical n-digit encoding of `value`, which must be an exact multiple
    /// of `2^-n` with |value| < 1. Negative values encode as the digit-wise
    /// negation of their magnitude.
    pub fn encode_fixed(value: Fx, n: u32) -> Result<DigitStream, MsdfError> {
        let raw = value
            .to_fixed(n)
            .ok_or(MsdfError::NotRepresentable { frac_bits: n })?;
        let bound = 1i128 << n;
        if raw <= -bound || raw >= bound {
            return Err(MsdfError::OutOfRange);
        }
        let mag = raw.unsigned_abs();
        let sign = if raw < 0 { -1 } else { 1 };
        let digits = (1..=n)
            .map(|j| {
                let bit = (mag >> (n - j)) & 1;
                SignedDigit::from_value(sign * bit as i64).unwrap()
            })
            .collect();
        Ok(DigitStream { digits, start: 0 })
    }
}
