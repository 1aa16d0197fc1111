//! Square multi-channel value grids.

use crate::fixed::{self, Fx};

/// `channels` square planes of side `side`, row major within a plane.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureMap {
    side: usize,
    channels: usize,
    values: Vec<Fx>,
}

impl FeatureMap {
    pub fn zeros(side: usize, channels: usize) -> FeatureMap {
        FeatureMap { side, channels, values: vec![fixed::ZERO; side * side * channels] }
    }

    pub fn from_fn(side: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> Fx) -> FeatureMap {
        let mut m = FeatureMap::zeros(side, channels);
        for c in 0..channels {
            for y in 0..side {
                for x in 0..side {
                    let v = f(c, y, x);
                    m.set(c, y, x, v);
                }
            }
        }
        m
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn idx(&self, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(c < self.channels && y < self.side && x < self.side);
        (c * self.side + y) * self.side + x
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> Fx {
        self.values[self.idx(c, y, x)]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: Fx) {
        let i = self.idx(c, y, x);
        self.values[i] = v;
    }

    /// One channel's plane, row major.
    pub fn plane(&self, c: usize) -> &[Fx] {
        let base = c * self.side * self.side;
        &self.values[base..base + self.side * self.side]
    }

    pub fn values(&self) -> &[Fx] {
        &self.values
    }

    /// Largest absolute difference to another map of the same shape.
    pub fn max_abs_diff(&self, other: &FeatureMap) -> Fx {
        assert_eq!((self.side, self.channels), (other.side, other.channels));
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).abs())
            .fold(fixed::ZERO, Fx::max)
    }
}
