//! Ordered map over an index range, parallel when the `parallel` feature is on.
//!
//! Results always come back in index order so that any subsequent fold is
//! independent of scheduling.

use alloc::vec::Vec;
use core::ops::Range;

#[cfg(feature = "parallel")]
pub(crate) fn map_range<R, F>(range: Range<usize>, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    range.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<R, F>(range: Range<usize>, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    range.map(f).collect()
}
