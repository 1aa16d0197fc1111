//! Exact dyadic fixed-point scalars.
//!
//! Every value is `num / 2^exp` with an `i128` numerator, so additions,
//! multiplications, and comparisons are exact. Feature maps, weights, digit
//! stream decodings, and reference convolutions all use this type; `f64`
//! appears only at the reporting boundary.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// A dyadic rational `num / 2^exp`, kept normalized (odd numerator or zero).
#[derive(Clone, Copy, Debug)]
pub struct Fx {
    num: i128,
    exp: u32,
}

pub const ZERO: Fx = Fx { num: 0, exp: 0 };
pub const ONE: Fx = Fx { num: 1, exp: 0 };

impl Fx {
    pub fn new(num: i128, exp: u32) -> Fx {
        Fx { num, exp }.normalize()
    }

    pub fn from_int(v: i64) -> Fx {
        Fx { num: v as i128, exp: 0 }
    }

    /// Value `raw / 2^frac_bits`.
    pub fn from_fixed(raw: i64, frac_bits: u32) -> Fx {
        Fx::new(raw as i128, frac_bits)
    }

    /// `2^-k`.
    pub fn pow2_neg(k: u32) -> Fx {
        Fx { num: 1, exp: k }
    }

    fn normalize(mut self) -> Fx {
        if self.num == 0 {
            self.exp = 0;
        } else {
            while self.exp > 0 && self.num & 1 == 0 {
                self.num >>= 1;
                self.exp -= 1;
            }
        }
        self
    }

    pub fn num(&self) -> i128 {
        self.num
    }

    /// Fractional bit count of the normalized representation.
    pub fn frac_bits(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    pub fn abs(self) -> Fx {
        Fx { num: self.num.abs(), exp: self.exp }
    }

    /// Scale by `2^-k`.
    pub fn div_pow2(self, k: u32) -> Fx {
        Fx::new(self.num, self.exp + k)
    }

    /// Scale by `2^k`.
    pub fn mul_pow2(self, k: u32) -> Fx {
        if self.exp >= k {
            Fx::new(self.num, self.exp - k)
        } else {
            let shift = k - self.exp;
            debug_assert!(shift < 100, "fixed-point overflow");
            Fx { num: self.num << shift, exp: 0 }
        }
    }

    /// Largest multiple of `2^-frac` that is <= self (truncation toward
    /// negative infinity).
    pub fn floor_bits(self, frac: u32) -> Fx {
        if self.exp <= frac {
            return self;
        }
        let shift = self.exp - frac;
        Fx::new(self.num >> shift, frac)
    }

    /// Exact integer scaled by `2^frac`, or None when not representable.
    pub fn to_fixed(self, frac: u32) -> Option<i128> {
        if self.exp > frac {
            return None;
        }
        Some(self.num << (frac - self.exp))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / 2f64.powi(self.exp as i32)
    }

    pub fn max(self, other: Fx) -> Fx {
        if self >= other {
            self
        } else {
            other
        }
    }

    fn aligned(a: Fx, b: Fx) -> (i128, i128, u32) {
        let exp = a.exp.max(b.exp);
        debug_assert!(exp < 120, "fixed-point exponent overflow");
        (a.num << (exp - a.exp), b.num << (exp - b.exp), exp)
    }
}

impl Add for Fx {
    type Output = Fx;
    fn add(self, rhs: Fx) -> Fx {
        let (a, b, exp) = Fx::aligned(self, rhs);
        Fx::new(a + b, exp)
    }
}

impl Sub for Fx {
    type Output = Fx;
    fn sub(self, rhs: Fx) -> Fx {
        let (a, b, exp) = Fx::aligned(self, rhs);
        Fx::new(a - b, exp)
    }
}

impl Mul for Fx {
    type Output = Fx;
    fn mul(self, rhs: Fx) -> Fx {
        Fx::new(self.num * rhs.num, self.exp + rhs.exp)
    }
}

impl Neg for Fx {
    type Output = Fx;
    fn neg(self) -> Fx {
        Fx { num: -self.num, exp: self.exp }
    }
}

impl PartialEq for Fx {
    fn eq(&self, other: &Fx) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Fx {}

impl PartialOrd for Fx {
    fn partial_cmp(&self, other: &Fx) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Fx {
    fn cmp(&self, other: &Fx) -> Ordering {
        let (a, b, _) = Fx::aligned(*self, *other);
        a.cmp(&b)
    }
}

impl fmt::Display for Fx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/2^{}", self.num, self.exp)
        }
    }
}
