//! Exact models of fused-layer CNN execution on most-significant-digit-first
//! (online) signed-digit arithmetic.
//!
//! The crate is organized by pipeline stage: [`msdf`] holds the digit-serial
//! operators, [`sop`] composes them into sum-of-products engines with early
//! negative detection, [`fusion`] plans cross-layer tiles, [`cost`] provides
//! analytic cycle and memory-traffic models, [`sim`] runs bit-accurate fused
//! executions against exact references, and [`io`] covers the on-disk
//! formats. All value-domain arithmetic is exact fixed point ([`fixed`]).

pub mod cost;
pub mod fixed;
pub mod fusion;
pub mod io;
pub mod msdf;
pub mod net;
pub mod sim;
pub mod sop;

#[cfg(test)]
pub(crate) mod fixtures;
