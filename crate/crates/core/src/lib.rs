//! Computable objects around l2 decoupling for the moment curve
//! `Γ(ξ) = (ξ, ξ², …, ξᵏ)`.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is on; the
//! default `parallel` feature pulls in `std` and `rayon` for histogram and
//! quadrature work.
//!
//! - [`dyadic`]: dyadic intervals and partitions of `[0, 1]`.
//! - [`geometry`]: points and derivatives of the curve, caps, polar boxes,
//!   bump functions, affine rescaling, wedge volumes and transversality.
//! - [`whitney`]: Whitney squares of `[0, 1]²` around the diagonal.
//! - [`counting`]: exact Vinogradov mean values via power-sum histograms.
//! - [`torus`]: Weyl sums, exact even moments and empirical decoupling ratios
//!   on the torus `[0, 1]ᵏ`.
//! - [`exponents`]: the exact-rational exponent bootstrap system.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod budget;
pub mod counting;
pub mod dyadic;
pub mod error;
pub mod exponents;
pub mod geometry;
pub mod torus;
pub mod whitney;

mod exact;
mod linalg;
mod par;
mod stats;

pub use budget::Budget;
pub use error::{Error, Result};
pub use stats::least_squares_slope;
