//! Dyadic subintervals of `[0, 1]`.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::{Error, Result};

/// Deepest level supported; indices stay well inside `u64`.
pub const MAX_LEVEL: u32 = 62;

/// The interval `[j·2⁻ⁿ, (j+1)·2⁻ⁿ]` for level `n` and index `j < 2ⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicInterval {
    level: u32,
    index: u64,
}

impl DyadicInterval {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::invalid(alloc::format!(
                "dyadic level {level} exceeds {MAX_LEVEL}"
            )));
        }
        if index >= 1u64 << level {
            return Err(Error::invalid(alloc::format!(
                "index {index} out of range for level {level}"
            )));
        }
        Ok(DyadicInterval { level, index })
    }

    /// `[0, 1]`.
    pub const fn unit() -> Self {
        DyadicInterval { level: 0, index: 0 }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn length(&self) -> f64 {
        libm::ldexp(1.0, -(self.level as i32))
    }

    pub fn left(&self) -> f64 {
        libm::ldexp(self.index as f64, -(self.level as i32))
    }

    pub fn right(&self) -> f64 {
        libm::ldexp((self.index + 1) as f64, -(self.level as i32))
    }

    pub fn center(&self) -> f64 {
        libm::ldexp((2 * self.index + 1) as f64, -(self.level as i32 + 1))
    }

    pub fn left_exact(&self) -> BigRational {
        BigRational::new(BigInt::from(self.index), BigInt::from(1u8) << self.level)
    }

    pub fn length_exact(&self) -> BigRational {
        BigRational::new(BigInt::from(1u8), BigInt::from(1u8) << self.level)
    }

    pub fn center_exact(&self) -> BigRational {
        BigRational::new(
            BigInt::from(2 * self.index + 1),
            BigInt::from(1u8) << (self.level + 1),
        )
    }

    /// The dyadic ancestor at a coarser `level`.
    pub fn ancestor(&self, level: u32) -> Option<Self> {
        (level <= self.level).then(|| DyadicInterval {
            level,
            index: self.index >> (self.level - level),
        })
    }

    /// Whether `other ⊆ self`, decided on (level, index) alone.
    pub fn contains(&self, other: &DyadicInterval) -> bool {
        other.ancestor(self.level) == Some(*self)
    }

    /// `J_I = κ⁻¹(J − a)` for `self = I = [a, a + κ]` and `J ⊆ I`.
    pub fn relative(&self, inner: &DyadicInterval) -> Option<Self> {
        if !self.contains(inner) {
            return None;
        }
        let depth = inner.level - self.level;
        Some(DyadicInterval {
            level: depth,
            index: inner.index - (self.index << depth),
        })
    }

    /// Euclidean gap between two intervals of the same level, in units of
    /// their common length (0 for equal or adjacent intervals).
    pub fn gap_units(&self, other: &DyadicInterval) -> Option<u64> {
        (self.level == other.level).then(|| self.index.abs_diff(other.index).saturating_sub(1))
    }

    /// Euclidean gap between two closed intervals.
    pub fn distance(&self, other: &DyadicInterval) -> f64 {
        let gap = libm::fmax(other.left() - self.right(), self.left() - other.right());
        libm::fmax(gap, 0.0)
    }

    /// Level `n = ⌈log₂ δ⁻¹⌉`: the coarsest level whose length is at most `delta`.
    pub fn level_for(delta: f64) -> Result<u32> {
        if !(delta > 0.0) || delta > 1.0 {
            return Err(Error::invalid(alloc::format!(
                "scale δ = {delta} must lie in (0, 1]"
            )));
        }
        let mut level = 0u32;
        while libm::ldexp(1.0, -(level as i32)) > delta {
            level += 1;
            if level > MAX_LEVEL {
                return Err(Error::invalid(alloc::format!(
                    "scale δ = {delta} is finer than level {MAX_LEVEL}"
                )));
            }
        }
        Ok(level)
    }

    /// `𝒫_I(δ)`: the tiling of `self` by dyadic intervals at level `⌈log₂ δ⁻¹⌉`.
    pub fn partition(&self, delta: f64) -> Result<Vec<DyadicInterval>> {
        if delta > self.length() {
            return Err(Error::invalid(alloc::format!(
                "scale δ = {delta} exceeds the interval length {}",
                self.length()
            )));
        }
        let level = Self::level_for(delta)?;
        Ok(self.children_at(level))
    }

    /// All descendants at `level` (empty if `level` is coarser than `self`), left to right.
    pub fn children_at(&self, level: u32) -> Vec<DyadicInterval> {
        if level < self.level {
            return Vec::new();
        }
        let depth = level - self.level;
        let first = self.index << depth;
        (first..first + (1u64 << depth))
            .map(|index| DyadicInterval { level, index })
            .collect()
    }

    /// The interval at `level` containing the point `x`, with right endpoints
    /// assigned to the left interval (so `x = 1` lands in the last interval and
    /// `x = 0` in the first).
    pub fn containing_left_closed(level: u32, numerator: u64, denominator: u64) -> Result<Self> {
        if denominator == 0 || numerator > denominator {
            return Err(Error::invalid("point must lie in [0, 1]"));
        }
        let scaled = (numerator as u128) << level;
        let d = denominator as u128;
        let ceil = scaled.div_ceil(d);
        let index = ceil.saturating_sub(1) as u64;
        DyadicInterval::new(level, index)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.left(), self.right())
    }
}

/// `𝒫_δ` over `[0, 1]`.
pub fn dyadic_partition(interval: &DyadicInterval, delta: f64) -> Result<Vec<DyadicInterval>> {
    interval.partition(delta)
}
