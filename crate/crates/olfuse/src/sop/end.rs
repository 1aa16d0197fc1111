//! Early negative detection on a digit stream.

use crate::msdf::SignedDigit;
use crate::sop::SopError;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndStatus {
    /// Digits still arriving; sign undecided.
    Running,
    /// The prefix value went strictly negative at this 1-based digit cycle.
    /// No suffix can recover: the deficit is at least one ulp of the prefix,
    /// and all remaining digits together contribute strictly less than that.
    Terminated { cycle: u32 },
    /// Stream ended with a strictly positive value.
    CompletedPositive,
    /// Stream ended decoding to exactly zero.
    Undetermined,
}

/// Sign monitor over an in-flight sum-of-products stream.
///
/// The positive and negative digit indicators accumulate into two unsigned
/// bit vectors of equal length; after each digit they are compared as
/// integers. `zplus < zminus` is exactly "the prefix value is negative",
/// at which point the monitor latches [`EndStatus::Terminated`].
#[derive(Clone, Debug)]
pub struct EndState {
    zplus: u128,
    zminus: u128,
    len: u32,
    status: EndStatus,
}

impl Default for EndState {
    fn default() -> Self {
        Self::new()
    }
}

impl EndState {
    pub fn new() -> EndState {
        EndState { zplus: 0, zminus: 0, len: 0, status: EndStatus::Running }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn status(&self) -> EndStatus {
        self.status
    }

    /// Feeds one digit; returns the status after the comparison.
    pub fn step(&mut self, d: SignedDigit) -> Result<EndStatus, SopError> {
        if self.status != EndStatus::Running {
            return Err(SopError::EndNotRunning);
        }
        assert!(self.len < 128, "stream too long for the sign monitor");
        let (p, m) = d.bits();
        self.zplus = (self.zplus << 1) | p as u128;
        self.zminus = (self.zminus << 1) | m as u128;
        self.len += 1;
        if self.zplus < self.zminus {
            self.status = EndStatus::Terminated { cycle: self.len };
        }
        Ok(self.status)
    }

    /// Declares the stream complete, classifying a still-running monitor.
    pub fn finish(&mut self) -> EndStatus {
        if self.status == EndStatus::Running {
            self.status = if self.zplus == self.zminus {
                EndStatus::Undetermined
            } else {
                EndStatus::CompletedPositive
            };
        }
        self.status
    }
}

/// Runs the monitor over a whole stream: final status plus digits consumed
/// (termination stops consumption early).
pub fn run_end(digits: &[SignedDigit]) -> (EndStatus, u32) {
    let mut end = EndState::new();
    for &d in digits {
        if let EndStatus::Terminated { cycle } = end.step(d).expect("monitor running") {
            return (end.status(), cycle);
        }
    }
    (end.finish(), digits.len() as u32)
}
