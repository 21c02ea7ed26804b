//! Exact-rational counterparts of the curve formulas, used where the
//! floating-point route is too ill-conditioned for the required accuracy.

use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub(crate) fn rational(x: f64) -> BigRational {
    // Finite f64 values are dyadic rationals, so this is exact.
    BigRational::from_float(x).expect("finite input")
}

pub(crate) fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub(crate) fn binomial(n: u32, r: u32) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(r) * factorial(n - r))
}

/// `∂ⁱΓ(ξ)` with `i = 0` giving `Γ(ξ)` itself.
pub(crate) fn curve_derivative(k: u32, i: u32, xi: &BigRational) -> Vec<BigRational> {
    (1..=k)
        .map(|j| {
            if j < i {
                BigRational::zero()
            } else {
                let falling = factorial(j) / factorial(j - i);
                BigRational::from_integer(falling) * num_traits::pow(xi.clone(), (j - i) as usize)
            }
        })
        .collect()
}

/// Determinant by fraction-exact Gaussian elimination.
pub(crate) fn det(rows: &[Vec<BigRational>]) -> BigRational {
    let n = rows.len();
    let mut m = rows.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

pub(crate) fn abs(x: BigRational) -> BigRational {
    x.abs()
}
