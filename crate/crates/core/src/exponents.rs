//! The exponent bootstrap in exact rationals.
//!
//! With `p_l = l(l+1)` and slopes `A_0 = η, A_1, …, A_{k−1}`, the bilinear
//! recursion reduces to the linear system
//!
//! ```text
//! A_l ≥ (1/l)·A_{k−l} + ((k−l)/(k−l+1))·A_{l−1},   1 ≤ l ≤ k−1,
//! ```
//!
//! written here as `a ≥ M a + c η`. Every column of `M` sums to one, so summing
//! the rows cancels `a` and leaves `0 ≥ ((k−1)/k)·η`.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn int(n: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn check_split(k: u32, l: u32) -> Result<()> {
    if k < 2 || l == 0 || l >= k {
        return Err(Error::invalid(alloc::format!(
            "split l = {l} must lie in 1..k−1 for k = {k} ≥ 2"
        )));
    }
    Ok(())
}

/// `p_k = k(k+1)`.
pub fn critical_exponent(k: u32) -> Result<u64> {
    if k == 0 {
        return Err(Error::invalid("degree k must be at least 1"));
    }
    Ok(u64::from(k) * (u64::from(k) + 1))
}

fn p(l: u32) -> u64 {
    u64::from(l) * (u64::from(l) + 1)
}

/// Hölder weight `θ_l` with the collinearity of
/// `(p_l, p_k − p_l)`, `(p_k − p_{k−l}, p_{k−l})` and `(p_{l−1}, p_k − p_{l−1})`
/// checked exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HolderSplit {
    pub k: u32,
    pub l: u32,
    pub theta: BigRational,
    /// `(p_l, p_k − p_l) − θ(…) − (1 − θ)(…)`; zero when the identity holds.
    pub residual: [BigRational; 2],
    /// All three points have coordinates summing to `p_k`.
    pub coordinate_sums_ok: bool,
}

impl HolderSplit {
    pub fn is_exact(&self) -> bool {
        self.coordinate_sums_ok && self.residual.iter().all(Zero::is_zero)
    }
}

pub fn holder_theta(k: u32, l: u32) -> Result<HolderSplit> {
    check_split(k, l)?;
    let pk = p(k);
    let target = [p(l), pk - p(l)];
    let upper = [pk - p(k - l), p(k - l)];
    let lower = [p(l - 1), pk - p(l - 1)];
    let theta = q(1, i64::from(k - l + 1));
    let rest = BigRational::one() - &theta;
    let residual = [0, 1].map(|c| int(target[c]) - &theta * int(upper[c]) - &rest * int(lower[c]));
    let coordinate_sums_ok = [target, upper, lower].iter().all(|pt| pt[0] + pt[1] == pk);
    Ok(HolderSplit {
        k,
        l,
        theta,
        residual,
        coordinate_sums_ok,
    })
}

/// `a ≥ M a + c η` for the slopes `a = (A_1, …, A_{k−1})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExponentSystem {
    pub k: u32,
    /// Row `l − 1` holds the coefficients of the `l`-th inequality.
    pub matrix: Vec<Vec<BigRational>>,
    pub source: Vec<BigRational>,
}

impl ExponentSystem {
    pub fn dim(&self) -> usize {
        self.matrix.len()
    }

    /// `1ᵀ M`.
    pub fn column_sums(&self) -> Vec<BigRational> {
        (0..self.dim())
            .map(|c| {
                self.matrix
                    .iter()
                    .fold(BigRational::zero(), |acc, row| acc + &row[c])
            })
            .collect()
    }

    /// `1ᵀ c`.
    pub fn source_mass(&self) -> BigRational {
        self.source.iter().fold(BigRational::zero(), |acc, x| acc + x)
    }

    /// Whether `(slopes, eta)` satisfies every inequality.
    pub fn is_satisfied_by(&self, slopes: &[BigRational], eta: &BigRational) -> bool {
        slopes.len() == self.dim()
            && self.matrix.iter().zip(&self.source).zip(slopes).all(|((row, c), a)| {
                let rhs = row
                    .iter()
                    .zip(slopes)
                    .fold(c * eta, |acc, (m, s)| acc + m * s);
                *a >= rhs
            })
    }
}

/// Builds `M` and `c` for degree `k ≥ 2`.
///
/// Row `l` has `1/l` at column `k − l` and, for `l ≥ 2`, `(k−l)/(k−l+1)` at
/// column `l − 1`; the two add when the columns coincide. For `l = 1` the
/// second term multiplies `A_0 = η` and goes to `c`.
pub fn build_system(k: u32) -> Result<ExponentSystem> {
    if k < 2 {
        return Err(Error::invalid("the exponent system needs k ≥ 2"));
    }
    let n = (k - 1) as usize;
    let mut matrix = alloc::vec![alloc::vec![BigRational::zero(); n]; n];
    let mut source = alloc::vec![BigRational::zero(); n];
    for l in 1..k {
        let row = (l - 1) as usize;
        matrix[row][(k - l - 1) as usize] += q(1, i64::from(l));
        let lower = q(i64::from(k - l), i64::from(k - l + 1));
        if l == 1 {
            source[row] += lower;
        } else {
            matrix[row][(l - 2) as usize] += lower;
        }
    }
    Ok(ExponentSystem { k, matrix, source })
}

/// Outcome of summing the inequalities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cancellation {
    pub k: u32,
    /// `1ᵀ M = 1ᵀ` exactly.
    pub left_vector_ok: bool,
    /// `1ᵀ c`, the coefficient of `η` after the slopes cancel.
    pub eta_coefficient: BigRational,
    /// The deduction "finite slopes ⇒ η ≤ 0" is valid: the slopes cancel and
    /// the surviving coefficient is positive.
    pub forces_eta_nonpositive: bool,
}

/// The value of `η` forced by the system together with `η ≥ 0`: zero when the
/// cancellation goes through, `None` otherwise.
pub fn implied_eta(k: u32) -> Result<Option<BigRational>> {
    let c = verify_cancellation(k)?;
    Ok(c.forces_eta_nonpositive.then(BigRational::zero))
}

pub fn verify_cancellation(k: u32) -> Result<Cancellation> {
    let system = build_system(k)?;
    let left_vector_ok = system.column_sums().iter().all(One::is_one);
    let eta_coefficient = system.source_mass();
    let forces_eta_nonpositive = left_vector_ok && eta_coefficient.is_positive();
    Ok(Cancellation {
        k,
        left_vector_ok,
        eta_coefficient,
        forces_eta_nonpositive,
    })
}

/// `σ_l = (k−l+1)·p_l/(l·p_k) + (p_k − p_l)/p_k`.
pub fn finiteness_slope(k: u32, l: u32) -> Result<BigRational> {
    check_split(k, l)?;
    let pk = int(p(k));
    let sigma = int(u64::from(k - l + 1) * p(l)) / (int(u64::from(l)) * &pk)
        + (&pk - int(p(l))) / &pk;
    debug_assert!(sigma.is_positive());
    Ok(sigma)
}

/// Upper bound `A_l(b) ≤ η − η·b·σ_l` from comparing with linear decoupling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeBound {
    pub l: u32,
    pub b: BigRational,
    pub coefficient: BigRational,
}

impl SlopeBound {
    pub fn new(k: u32, l: u32, b: BigRational) -> Result<Self> {
        let coefficient = finiteness_slope(k, l)?;
        Ok(SlopeBound { l, b, coefficient })
    }

    /// `η(1 − bσ_l)`.
    pub fn bound(&self, eta: &BigRational) -> BigRational {
        eta * (BigRational::one() - &self.b * &self.coefficient)
    }

    /// Combining `η ≤ C·b + A_l(b)` with the bound gives `η·b·σ_l ≤ C·b`,
    /// so `η ≤ C/σ_l` for any explicit `C`.
    pub fn eta_ceiling(&self, c: &BigRational) -> BigRational {
        c / &self.coefficient
    }
}

/// Largest admissible `b` in the key lemma: `l(k−l)/((l+1)(k−l+1))`, and for
/// `l ≥ 2` also at most `(l−1)/(k−l+2)`.
pub fn validity_range(k: u32, l: u32) -> Result<BigRational> {
    check_split(k, l)?;
    let (k, l) = (i64::from(k), i64::from(l));
    let first = q(l * (k - l), (l + 1) * (k - l + 1));
    if l == 1 {
        return Ok(first);
    }
    Ok(first.min(q(l - 1, k - l + 2)))
}

/// `A_0(b) = η(1 − b)` as the pair `(constant, coefficient of η)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineForm {
    pub constant: BigRational,
    pub eta_coefficient: BigRational,
}

impl AffineForm {
    pub fn eval(&self, eta: &BigRational) -> BigRational {
        &self.constant + &self.eta_coefficient * eta
    }
}

pub fn a0_line(b: &BigRational) -> Result<AffineForm> {
    if b.is_negative() || *b > BigRational::one() {
        return Err(Error::invalid("b must lie in [0, 1]"));
    }
    Ok(AffineForm {
        constant: BigRational::zero(),
        eta_coefficient: BigRational::one() - b,
    })
}
