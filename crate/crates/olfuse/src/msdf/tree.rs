//! Balanced reduction trees of online adders.

use crate::fixed::Fx;
use crate::msdf::add::online_add;
use crate::msdf::stream::DigitStream;
use crate::msdf::MsdfError;

/// A digit stream whose decoded value is understood as scaled down by
/// `2^log2_scale`; multiplying back recovers the represented quantity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScaledStream {
    pub stream: DigitStream,
    pub log2_scale: u32,
}

impl ScaledStream {
    /// The represented value with the scale folded back in.
    pub fn value(&self) -> Fx {
        self.stream.decode().mul_pow2(self.log2_scale)
    }
}

/// Number of adder levels needed to reduce `m` operands.
pub fn tree_depth(m: usize) -> u32 {
    debug_assert!(m > 0);
    (m as u32).next_power_of_two().trailing_zeros()
}

/// Sums equal-length streams through a balanced tree of halving adders.
///
/// Odd operands at a level pair with a zero stream. After `d = ceil(log2 m)`
/// levels the output decodes to `(sum of inputs) / 2^d`; the scale rides
/// along in the result. Each level adds one online-adder delay and two
/// digits of length.
pub fn reduce_tree(streams: &[DigitStream]) -> Result<ScaledStream, MsdfError> {
    if streams.is_empty() {
        return Err(MsdfError::EmptyReduce);
    }
    let len = streams[0].len();
    if streams.iter().any(|s| s.len() != len) {
        return Err(MsdfError::LengthMismatch {
            a: len,
            b: streams.iter().map(|s| s.len()).find(|&l| l != len).unwrap(),
        });
    }

    let mut level: Vec<DigitStream> = streams.to_vec();
    let mut depth = 0u32;
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        for pair in level.chunks(2) {
            let out = match pair {
                [a, b] => online_add(a, b)?,
                [a] => {
                    let zero = DigitStream::zeros(a.len(), a.start());
                    online_add(a, &zero)?
                }
                _ => unreachable!(),
            };
            next.push(out);
        }
        level = next;
        depth += 1;
    }
    Ok(ScaledStream { stream: level.pop().unwrap(), log2_scale: depth })
}
