//! Whitney decomposition of `[0, 1]²` around the diagonal.
//!
//! All predicates work on (level, index) pairs; nothing here touches floating
//! point.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::dyadic::{DyadicInterval, MAX_LEVEL};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SquareClass {
    /// Member of `𝒲_n`: `2ⁿ·dist(I₁, I₂) ∈ {1, 2}`.
    OffDiagonal,
    /// Member of `𝒲̃_N`: equal or adjacent intervals at the finest level.
    Diagonal,
}

impl SquareClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            SquareClass::OffDiagonal => "offdiagonal",
            SquareClass::Diagonal => "diagonal",
        }
    }
}

/// An ordered pair of same-level dyadic intervals, i.e. the square `I₁ × I₂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WhitneySquare {
    pub scale: u32,
    pub first: DyadicInterval,
    pub second: DyadicInterval,
    pub class: SquareClass,
}

impl WhitneySquare {
    fn new(scale: u32, i: u64, j: u64, class: SquareClass) -> Self {
        WhitneySquare {
            scale,
            first: DyadicInterval::new(scale, i).expect("index within level"),
            second: DyadicInterval::new(scale, j).expect("index within level"),
            class,
        }
    }

    pub fn indices(&self) -> (u64, u64) {
        (self.first.index(), self.second.index())
    }

    /// `|I₁|·|I₂|` exactly.
    pub fn area(&self) -> BigRational {
        BigRational::new(BigInt::from(1u8), BigInt::from(1u8) << (2 * self.scale))
    }

    /// Whether `self ⊆ other` as closed squares (componentwise dyadic ancestry).
    pub fn is_inside(&self, other: &WhitneySquare) -> bool {
        other.first.contains(&self.first) && other.second.contains(&self.second)
    }

    /// Whether the open squares intersect, from integer endpoints at the finer level.
    pub fn interiors_overlap(&self, other: &WhitneySquare) -> bool {
        let level = self.scale.max(other.scale);
        let span = |iv: &DyadicInterval| {
            let shift = level - iv.level();
            (iv.index() << shift, (iv.index() + 1) << shift)
        };
        let open_overlap = |a: (u64, u64), b: (u64, u64)| a.0 < b.1 && b.0 < a.1;
        open_overlap(span(&self.first), span(&other.first))
            && open_overlap(span(&self.second), span(&other.second))
    }
}

fn check_level(n: u32, what: &str) -> Result<()> {
    if !(2..=MAX_LEVEL / 2).contains(&n) {
        return Err(Error::invalid(alloc::format!(
            "{what} level {n} must lie in 2..={}",
            MAX_LEVEL / 2
        )));
    }
    Ok(())
}

/// Index pairs at `level` whose gap is 1 or 2 interval lengths.
fn candidates(level: u32) -> impl Iterator<Item = (u64, u64)> {
    let count = 1u64 << level;
    (0..count).flat_map(move |i| {
        [i.checked_sub(3), i.checked_sub(2), Some(i + 2), Some(i + 3)]
            .into_iter()
            .flatten()
            .filter(move |&j| j < count)
            .map(move |j| (i, j))
    })
}

/// `𝒲_2, …, 𝒲_n` as index sets, each excluding squares contained in an
/// earlier one.
fn offdiagonal_levels(n: u32) -> Vec<BTreeSet<(u64, u64)>> {
    let mut levels: Vec<BTreeSet<(u64, u64)>> = Vec::new();
    for level in 2..=n {
        let set = candidates(level)
            .filter(|&(i, j)| {
                !levels.iter().enumerate().any(|(pos, earlier)| {
                    let shift = level - (pos as u32 + 2);
                    earlier.contains(&(i >> shift, j >> shift))
                })
            })
            .collect();
        levels.push(set);
    }
    levels
}

/// `𝒲_n` (with `𝒲_1 = ∅`), in lexicographic index order.
pub fn whitney_offdiagonal(n: u32) -> Result<Vec<WhitneySquare>> {
    check_level(n, "Whitney")?;
    let levels = offdiagonal_levels(n);
    Ok(levels
        .last()
        .into_iter()
        .flatten()
        .map(|&(i, j)| WhitneySquare::new(n, i, j, SquareClass::OffDiagonal))
        .collect())
}

/// `𝒲̃_N`: all ordered pairs at level `N` with `dist(I₁, I₂) = 0`.
pub fn whitney_diagonal(n: u32) -> Result<Vec<WhitneySquare>> {
    check_level(n, "Whitney")?;
    let count = 1u64 << n;
    Ok((0..count)
        .flat_map(|i| {
            [i.checked_sub(1), Some(i), Some(i + 1)]
                .into_iter()
                .flatten()
                .filter(move |&j| j < count)
                .map(move |j| WhitneySquare::new(n, i, j, SquareClass::Diagonal))
        })
        .collect())
}

/// `𝒲^N = ⋃_{n=2}^{N} 𝒲_n ∪ 𝒲̃_N`, coarse scales first.
pub fn whitney_cover(n: u32) -> Result<Vec<WhitneySquare>> {
    check_level(n, "Whitney")?;
    let mut out: Vec<WhitneySquare> = offdiagonal_levels(n)
        .iter()
        .zip(2u32..)
        .flat_map(|(set, level)| {
            set.iter()
                .map(move |&(i, j)| WhitneySquare::new(level, i, j, SquareClass::OffDiagonal))
        })
        .collect();
    out.extend(whitney_diagonal(n)?);
    Ok(out)
}

/// Total area `Σ |I₁||I₂|` in exact arithmetic.
pub fn total_area(squares: &[WhitneySquare]) -> BigRational {
    squares
        .iter()
        .fold(BigRational::zero(), |acc, sq| acc + sq.area())
}

/// Whether no two squares share interior points.
///
/// Two dyadic squares overlap exactly when the coarser one is an ancestor of
/// the finer, so each square only needs its ancestors looked up.
pub fn interiors_disjoint(squares: &[WhitneySquare]) -> bool {
    let mut seen: BTreeSet<(u32, u64, u64)> = BTreeSet::new();
    for sq in squares {
        let (i, j) = sq.indices();
        if !seen.insert((sq.scale, i, j)) {
            return false;
        }
    }
    squares.iter().all(|sq| {
        let (i, j) = sq.indices();
        (0..sq.scale).all(|level| {
            let shift = sq.scale - level;
            !seen.contains(&(level, i >> shift, j >> shift))
        })
    })
}

/// Exhaustive `O(M²)` pairwise overlap test; slow but independent of the
/// ancestry shortcut in [`interiors_disjoint`].
pub fn interiors_disjoint_pairwise(squares: &[WhitneySquare]) -> bool {
    squares.iter().enumerate().all(|(a, sa)| {
        squares[a + 1..]
            .iter()
            .all(|sb| !sa.interiors_overlap(sb))
    })
}

/// Slot occurrences (as first or second entry) of each interval in `squares`.
pub fn occurrences(squares: &[WhitneySquare]) -> BTreeMap<DyadicInterval, usize> {
    let mut counts = BTreeMap::new();
    for sq in squares {
        *counts.entry(sq.first).or_insert(0) += 1;
        *counts.entry(sq.second).or_insert(0) += 1;
    }
    counts
}

/// Occurrence counts behind the `6` and `8` multiplicity bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiplicityReport {
    pub level: u32,
    /// Largest number of slots any interval of level `N` fills in `𝒲̃_N`.
    pub max_diagonal: usize,
    /// `(n, largest number of slots any interval of level n fills in 𝒲_n)`.
    pub max_offdiagonal: Vec<(u32, usize)>,
}

pub fn multiplicity_report(n: u32) -> Result<MultiplicityReport> {
    check_level(n, "Whitney")?;
    let max_of = |squares: &[WhitneySquare]| occurrences(squares).into_values().max().unwrap_or(0);
    let max_diagonal = max_of(&whitney_diagonal(n)?);
    let max_offdiagonal = offdiagonal_levels(n)
        .iter()
        .zip(2u32..)
        .map(|(set, level)| {
            let squares: Vec<WhitneySquare> = set
                .iter()
                .map(|&(i, j)| WhitneySquare::new(level, i, j, SquareClass::OffDiagonal))
                .collect();
            (level, max_of(&squares))
        })
        .collect();
    Ok(MultiplicityReport {
        level: n,
        max_diagonal,
        max_offdiagonal,
    })
}

/// Slot occurrences of one interval in `𝒲̃_N`.
pub fn diagonal_multiplicity(n: u32, interval: &DyadicInterval) -> Result<usize> {
    if interval.level() != n {
        return Err(Error::invalid("interval must sit at the diagonal level"));
    }
    Ok(occurrences(&whitney_diagonal(n)?)
        .get(interval)
        .copied()
        .unwrap_or(0))
}
