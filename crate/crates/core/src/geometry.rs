//! Geometry of the moment curve `Γ(ξ) = (ξ, ξ², …, ξᵏ)`.
//!
//! Floating-point routines accept degrees `1 ≤ k ≤ 8`. Where cancellation
//! would swamp the answer (vertex rescaling, full-rank wedges) the work is
//! done in exact rationals; `f64` inputs are dyadic rationals, so those
//! conversions lose nothing.

use alloc::vec::Vec;

use num_rational::BigRational;
use num_traits::Zero;

use crate::dyadic::DyadicInterval;
use crate::{exact, linalg, Error, Result};

pub use crate::dyadic::dyadic_partition;

/// Largest degree handled by the floating-point paths.
pub const MAX_FLOAT_DEGREE: u32 = 8;

/// Exponent `m` in the bump profile `max(1, g)^(-m)` is `BUMP_DECAY_PER_DEGREE · k`.
pub const BUMP_DECAY_PER_DEGREE: i32 = 10;

/// Relative size below which a projected vector counts as dependent.
pub const DEPENDENCE_TOLERANCE: f64 = 1e-12;

fn check_degree(k: u32) -> Result<()> {
    if k == 0 || k > MAX_FLOAT_DEGREE {
        return Err(Error::invalid(alloc::format!(
            "degree k = {k} must lie in 1..={MAX_FLOAT_DEGREE}"
        )));
    }
    Ok(())
}

fn check_split(k: u32, l: u32) -> Result<()> {
    check_degree(k)?;
    if l == 0 || l >= k {
        return Err(Error::invalid(alloc::format!(
            "split l = {l} must lie in 1..={} for k = {k}",
            k.saturating_sub(1)
        )));
    }
    Ok(())
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn powi(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

/// `Γ(ξ)`.
pub fn moment_curve(k: u32, xi: f64) -> Result<Vec<f64>> {
    check_degree(k)?;
    Ok((1..=k).map(|j| powi(xi, j)).collect())
}

/// `∂ⁱΓ(ξ)`: component `j` is `j!/(j−i)!·ξ^(j−i)` for `j ≥ i`, else 0.
pub fn curve_derivative(k: u32, i: u32, xi: f64) -> Result<Vec<f64>> {
    check_degree(k)?;
    if i == 0 || i > k {
        return Err(Error::invalid(alloc::format!(
            "derivative order {i} must lie in 1..={k}"
        )));
    }
    Ok(derivative_unchecked(k, i, xi))
}

fn derivative_unchecked(k: u32, i: u32, xi: f64) -> Vec<f64> {
    (1..=k)
        .map(|j| {
            if j < i {
                0.0
            } else {
                factorial(j) / factorial(j - i) * powi(xi, j - i)
            }
        })
        .collect()
}

/// Rows `∂¹Γ(ξ), …, ∂ᵏΓ(ξ)`.
fn frame(k: u32, xi: f64) -> Vec<Vec<f64>> {
    (1..=k).map(|i| derivative_unchecked(k, i, xi)).collect()
}

/// The set `{center + Σ tᵢ·hᵢ·axisᵢ : |tᵢ| ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Parallelepiped {
    pub center: Vec<f64>,
    /// Direction vectors, one per row.
    pub axes: Vec<Vec<f64>>,
    pub half_widths: Vec<f64>,
}

impl Parallelepiped {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `2ᵏ·|det axes|·∏ hᵢ`.
    pub fn volume(&self) -> f64 {
        let k = self.dim() as i32;
        libm::ldexp(libm::fabs(linalg::det(&self.axes)), k) * self.half_widths.iter().product::<f64>()
    }

    /// Point with box coordinates `t`.
    pub fn point(&self, t: &[f64]) -> Vec<f64> {
        let mut x = self.center.clone();
        for ((ti, hi), axis) in t.iter().zip(&self.half_widths).zip(&self.axes) {
            for (xj, aj) in x.iter_mut().zip(axis) {
                *xj += ti * hi * aj;
            }
        }
        x
    }

    /// All `2ᵏ` vertices; bit `i` of the vertex index selects the sign of axis `i`.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let k = self.dim();
        (0..1usize << k)
            .map(|mask| {
                let t: Vec<f64> = (0..k)
                    .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
                    .collect();
                self.point(&t)
            })
            .collect()
    }

    /// Box coordinates of `x` (`None` for a singular axis matrix).
    pub fn coordinates(&self, x: &[f64]) -> Option<Vec<f64>> {
        let rhs: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        let scaled: Vec<f64> = linalg::solve(&linalg::transpose(&self.axes), &rhs)?;
        Some(scaled.iter().zip(&self.half_widths).map(|(s, h)| s / h).collect())
    }

    /// Whether `x` lies in the concentric copy dilated by `dilation`.
    pub fn contains(&self, x: &[f64], dilation: f64) -> bool {
        self.coordinates(x)
            .is_some_and(|t| t.iter().all(|ti| libm::fabs(*ti) <= dilation))
    }

    /// Midpoint-rule integral of `f` over the dilated box with `points` nodes per axis.
    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F, dilation: f64, points: usize) -> f64 {
        let k = self.dim();
        let jacobian = self.volume() / libm::ldexp(1.0, k as i32);
        let step = 2.0 * dilation / points as f64;
        let total = points.pow(k as u32);
        let mut sum = crate::stats::CompensatedSum::default();
        let mut t = alloc::vec![0.0; k];
        for flat in 0..total {
            let mut rest = flat;
            for ti in t.iter_mut() {
                *ti = -dilation + step * ((rest % points) as f64 + 0.5);
                rest /= points;
            }
            sum.add(f(&self.point(&t)));
        }
        sum.value() * jacobian * powi(step, k as u32)
    }
}

/// The cap `𝒰_J`: center `Γ(c_J)`, axes `∂ⁱΓ(c_J)`, half-widths `|J|ⁱ`.
pub fn cap(interval: &DyadicInterval, k: u32) -> Result<Parallelepiped> {
    check_degree(k)?;
    let c = interval.center();
    let len = interval.length();
    Ok(Parallelepiped {
        center: moment_curve(k, c)?,
        axes: frame(k, c),
        half_widths: (1..=k).map(|i| powi(len, i)).collect(),
    })
}

/// `|𝒰_J| = 2ᵏ·|J|^(k(k+1)/2)·∏ i!`.
pub fn cap_volume(interval: &DyadicInterval, k: u32) -> Result<f64> {
    check_degree(k)?;
    let len = interval.length();
    let product: f64 = (1..=k).map(factorial).product();
    Ok(libm::ldexp(powi(len, k * (k + 1) / 2) * product, k as i32))
}

/// `𝒰*_I = {x : |⟨x, ∂ⁱΓ(c_I)⟩| ≤ |I|⁻ⁱ}`, written as a parallelepiped
/// whose axes are the dual basis of the derivative frame.
pub fn polar_box(interval: &DyadicInterval, k: u32) -> Result<Parallelepiped> {
    check_degree(k)?;
    let c = interval.center();
    let len = interval.length();
    let f = frame(k, c);
    let n = k as usize;
    // Row i of the result is column i of the inverse frame.
    let axes = (0..n)
        .map(|i| {
            let mut e = alloc::vec![0.0; n];
            e[i] = 1.0;
            linalg::solve(&f, &e).expect("derivative frame is triangular with nonzero diagonal")
        })
        .collect();
    Ok(Parallelepiped {
        center: alloc::vec![0.0; n],
        axes,
        half_widths: (1..=k).map(|i| powi(len, i).recip()).collect(),
    })
}

/// `|𝒰*_I| = 2ᵏ·|I|^(−k(k+1)/2) / ∏ i!`.
pub fn polar_box_volume(interval: &DyadicInterval, k: u32) -> Result<f64> {
    Ok(cap_volume(interval, k)?.recip() * libm::ldexp(1.0, 2 * k as i32))
}

/// Gauge `g(x) = maxᵢ |⟨x, ∂ⁱΓ(c_I)⟩|·|I|ⁱ`; `x ∈ 𝒰*_I` iff `g(x) ≤ 1`.
pub fn polar_box_gauge(interval: &DyadicInterval, k: u32, x: &[f64]) -> Result<f64> {
    check_degree(k)?;
    if x.len() != k as usize {
        return Err(Error::invalid("point dimension must equal k"));
    }
    let c = interval.center();
    let len = interval.length();
    Ok((1..=k)
        .map(|i| libm::fabs(linalg::dot(x, &derivative_unchecked(k, i, c))) * powi(len, i))
        .fold(0.0, libm::fmax))
}

/// `φ_I(x) = |𝒰*_I|⁻¹ · max(1, g(x))^(−10k)`.
pub fn bump(interval: &DyadicInterval, k: u32, x: &[f64]) -> Result<f64> {
    let g = polar_box_gauge(interval, k, x)?;
    let volume = polar_box_volume(interval, k)?;
    let decay = BUMP_DECAY_PER_DEGREE * k as i32;
    Ok(libm::pow(libm::fmax(1.0, g), -f64::from(decay)) / volume)
}

/// Numerical `∫ φ_I` over `dilation·𝒰*_I` (midpoint rule, `points` per axis).
pub fn bump_mass(interval: &DyadicInterval, k: u32, dilation: f64, points: usize) -> Result<f64> {
    let polar = polar_box(interval, k)?;
    if !(dilation >= 1.0) || points == 0 {
        return Err(Error::invalid("dilation must be ≥ 1 and points positive"));
    }
    Ok(polar.integrate(
        |x| bump(interval, k, x).unwrap_or(0.0),
        dilation,
        points,
    ))
}

/// Closed form of `∫ φ_I` over `dilation·𝒰*_I`: `1 + (1 − D^(k−m))·k/(m−k)`
/// with `m = 10k`; it tends to `10/9` as the box grows.
pub fn bump_mass_analytic(k: u32, dilation: f64) -> f64 {
    let m = f64::from(BUMP_DECAY_PER_DEGREE) * f64::from(k);
    let kf = f64::from(k);
    1.0 + kf / (m - kf) * (1.0 - libm::pow(dilation, kf - m))
}

/// An affine map `η ↦ Lη + b` on `ℝᵏ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub linear: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

impl AffineMap {
    pub fn apply(&self, eta: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.linear, eta)
            .into_iter()
            .zip(&self.translation)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn apply_linear(&self, v: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.linear, v)
    }

    /// Preimage of `y`; the rescaling maps are lower triangular.
    pub fn inverse_apply(&self, y: &[f64]) -> Vec<f64> {
        let shifted: Vec<f64> = y.iter().zip(&self.translation).map(|(a, b)| a - b).collect();
        linalg::solve_lower(&self.linear, &shifted)
    }
}

/// `A_I` for `I = [a, a + κ]`: `(A_I η)_j = Σ_{j'=0}^{j} C(j, j')·a^(j−j')·κ^(j')·η_{j'}`
/// with `η₀ = 1`, so that `A_I Γ(t) = Γ(a + tκ)`.
pub fn affine_map(interval: &DyadicInterval, k: u32) -> Result<AffineMap> {
    check_degree(k)?;
    let a = interval.left();
    let kappa = interval.length();
    let binom = |n: u32, r: u32| factorial(n) / (factorial(r) * factorial(n - r));
    let linear = (1..=k)
        .map(|j| {
            (1..=k)
                .map(|jp| {
                    if jp > j {
                        0.0
                    } else {
                        binom(j, jp) * powi(a, j - jp) * powi(kappa, jp)
                    }
                })
                .collect()
        })
        .collect();
    let translation = (1..=k).map(|j| powi(a, j)).collect();
    Ok(AffineMap { linear, translation })
}

fn check_nested(outer: &DyadicInterval, inner: &DyadicInterval) -> Result<DyadicInterval> {
    outer
        .relative(inner)
        .ok_or_else(|| Error::invalid(alloc::format!("{inner} is not contained in {outer}")))
}

/// Maps the vertices of `𝒰_J` through `A_I⁻¹` and returns the largest
/// distance to the matching vertex of `𝒰_{J_I}`, `J_I = κ⁻¹(J − a)`.
///
/// Both sides are built in exact rationals from the dyadic endpoints, so the
/// residual reflects the map itself rather than cancellation in `A_I⁻¹`
/// (whose entries grow like `κ⁻ᵏ`).
pub fn verify_cap_rescaling(outer: &DyadicInterval, inner: &DyadicInterval, k: u32) -> Result<f64> {
    check_degree(k)?;
    let rescaled = check_nested(outer, inner)?;
    let a = outer.left_exact();
    let kappa = outer.length_exact();

    // Lower-triangular binomial matrix and translation of A_I.
    let n = k as usize;
    let mut linear = alloc::vec![alloc::vec![BigRational::zero(); n]; n];
    let mut translation = Vec::with_capacity(n);
    for j in 1..=k {
        for jp in 1..=j {
            linear[(j - 1) as usize][(jp - 1) as usize] = BigRational::from_integer(exact::binomial(j, jp))
                * num_traits::pow(a.clone(), (j - jp) as usize)
                * num_traits::pow(kappa.clone(), jp as usize);
        }
        translation.push(num_traits::pow(a.clone(), j as usize));
    }

    let source = exact_cap_vertices(inner, k);
    let target = exact_cap_vertices(&rescaled, k);
    let mut worst = BigRational::zero();
    for (y, expected) in source.iter().zip(&target) {
        // Forward substitution for L x = y − b.
        let mut x: Vec<BigRational> = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = &y[i] - &translation[i];
            for (lij, xj) in linear[i].iter().zip(&x) {
                acc -= lij * xj;
            }
            x.push(acc / &linear[i][i]);
        }
        let dist2 = x
            .iter()
            .zip(expected)
            .map(|(p, q)| {
                let d = p - q;
                &d * &d
            })
            .fold(BigRational::zero(), |s, t| s + t);
        if dist2 > worst {
            worst = dist2;
        }
    }
    Ok(libm::sqrt(exact::to_f64(&worst)))
}

fn exact_cap_vertices(interval: &DyadicInterval, k: u32) -> Vec<Vec<BigRational>> {
    let c = interval.center_exact();
    let len = interval.length_exact();
    let center = exact::curve_derivative(k, 0, &c);
    let axes: Vec<Vec<BigRational>> = (1..=k)
        .map(|i| {
            let h = num_traits::pow(len.clone(), i as usize);
            exact::curve_derivative(k, i, &c)
                .into_iter()
                .map(|v| v * &h)
                .collect()
        })
        .collect();
    (0..1usize << k)
        .map(|mask| {
            let mut v = center.clone();
            for (i, axis) in axes.iter().enumerate() {
                let positive = mask >> i & 1 == 1;
                for (vj, aj) in v.iter_mut().zip(axis) {
                    if positive {
                        *vj += aj;
                    } else {
                        *vj -= aj;
                    }
                }
            }
            v
        })
        .collect()
}

/// Floating-point variant of [`verify_cap_rescaling`]; its error grows like
/// `ε·|I|⁻ᵏ`, so it is only meaningful for coarse `I`.
pub fn cap_rescaling_residual_f64(outer: &DyadicInterval, inner: &DyadicInterval, k: u32) -> Result<f64> {
    let rescaled = check_nested(outer, inner)?;
    let map = affine_map(outer, k)?;
    let source = cap(inner, k)?.vertices();
    let target = cap(&rescaled, k)?.vertices();
    Ok(source
        .iter()
        .zip(&target)
        .map(|(y, expected)| {
            let x = map.inverse_apply(y);
            let d: Vec<f64> = x.iter().zip(expected).map(|(p, q)| p - q).collect();
            linalg::norm(&d)
        })
        .fold(0.0, libm::fmax))
}

/// `|v₁ ∧ ⋯ ∧ v_m| = √det G` for the Gram matrix `G`; for `m = k` this is
/// `|det|` of the stacked vectors.
pub fn wedge_volume(vectors: &[Vec<f64>]) -> Result<f64> {
    let Some(first) = vectors.first() else {
        return Err(Error::invalid("wedge of an empty list"));
    };
    let dim = first.len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::invalid("wedge vectors must share one dimension"));
    }
    if vectors.len() > dim {
        return Err(Error::invalid("more vectors than dimensions"));
    }
    if vectors.len() == dim {
        return Ok(libm::fabs(linalg::det(vectors)));
    }
    Ok(libm::sqrt(libm::fmax(linalg::det(&linalg::gram(vectors)), 0.0)))
}

/// `C(k,l)·(∏_{i≤l} i!)·(∏_{j≤k−l} j!)`, the value of the transversality
/// wedge at `(ξ₁, ξ₂) = (0, 1)`.
pub fn transversality_constant(k: u32, l: u32) -> Result<f64> {
    check_split(k, l)?;
    let c = exact::binomial(k, l)
        * (1..=l).map(exact::factorial).product::<num_bigint::BigInt>()
        * (1..=k - l).map(exact::factorial).product::<num_bigint::BigInt>();
    Ok(exact::to_f64(&BigRational::from_integer(c)))
}

/// `|∂¹Γ(ξ₁) ∧ ⋯ ∧ ∂ˡΓ(ξ₁) ∧ ∂¹Γ(ξ₂) ∧ ⋯ ∧ ∂^(k−l)Γ(ξ₂)|`.
///
/// The determinant is evaluated exactly: near the diagonal it is of size
/// `|ξ₁ − ξ₂|^(l(k−l))` while its entries are of order `k!`, which leaves
/// nothing for floating-point elimination.
pub fn transversality_value(k: u32, l: u32, xi1: f64, xi2: f64) -> Result<f64> {
    check_split(k, l)?;
    if !xi1.is_finite() || !xi2.is_finite() {
        return Err(Error::invalid("curve parameters must be finite"));
    }
    let a = exact::rational(xi1);
    let b = exact::rational(xi2);
    let rows: Vec<Vec<BigRational>> = (1..=l)
        .map(|i| exact::curve_derivative(k, i, &a))
        .chain((1..=k - l).map(|i| exact::curve_derivative(k, i, &b)))
        .collect();
    Ok(exact::to_f64(&exact::abs(exact::det(&rows))))
}

/// Wedge of `∂¹Γ(ξ), …, ∂ˡΓ(ξ)` after orthogonal projection onto the
/// complement `H` of `V^(k−l)(ξ') = span(∂¹Γ(ξ'), …, ∂^(k−l)Γ(ξ'))`.
pub fn projected_wedge(k: u32, l: u32, xi_ref: f64, xi: f64) -> Result<f64> {
    check_split(k, l)?;
    let span: Vec<Vec<f64>> = (1..=k - l).map(|i| derivative_unchecked(k, i, xi_ref)).collect();
    let basis = linalg::orthonormal_basis(&span, DEPENDENCE_TOLERANCE);
    let projected: Vec<Vec<f64>> = (1..=l)
        .map(|i| linalg::project_out(&derivative_unchecked(k, i, xi), &basis))
        .collect();
    // Joint MGS pass: a collapsing residual means the projected frame is degenerate.
    let mut joint = basis.clone();
    for (i, w) in (1..=l).zip(&projected) {
        let scale = linalg::norm(&derivative_unchecked(k, i, xi));
        let residual = linalg::project_out(w, &joint);
        let len = linalg::norm(&residual);
        if len <= DEPENDENCE_TOLERANCE * scale {
            return Ok(0.0);
        }
        joint.push(residual.iter().map(|x| x / len).collect());
    }
    wedge_volume(&projected)
}

/// Minimum of [`projected_wedge`] over `grid`: the torsion of the projected
/// curve `P∘Γ` on those parameters.
pub fn projected_torsion(k: u32, l: u32, xi_ref: f64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::invalid("empty parameter grid"));
    }
    grid.iter()
        .map(|&xi| projected_wedge(k, l, xi_ref, xi))
        .try_fold(f64::INFINITY, |m, v| v.map(|v| libm::fmin(m, v)))
}

/// `|∂¹Γ(ξ') ∧ ⋯ ∧ ∂^m Γ(ξ')|` for `m < k`, the normaliser in the torsion quotient.
pub fn tangent_volume(k: u32, m: u32, xi: f64) -> Result<f64> {
    check_degree(k)?;
    if m == 0 || m > k {
        return Err(Error::invalid("tangent order out of range"));
    }
    let vectors: Vec<Vec<f64>> = (1..=m).map(|i| derivative_unchecked(k, i, xi)).collect();
    wedge_volume(&vectors)
}

/// Exact `Γ(t)` for dyadic `t`, exposed for callers that want to check the
/// floating-point path.
pub fn moment_curve_exact(k: u32, t: &BigRational) -> Vec<BigRational> {
    exact::curve_derivative(k, 0, t)
}
