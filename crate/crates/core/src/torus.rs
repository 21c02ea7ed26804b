//! Weyl sums `f(x) = Σ a_n e(n x₁ + n² x₂ + ⋯ + nᵏ x_k)` on the torus `[0, 1]ᵏ`
//! and the empirical decoupling ratios built from them.
//!
//! Even moments `∫|f|^{2s}` are computed exactly, either by a tensor grid with
//! `2sN^j + 1` nodes in coordinate `j` (the integrand is a trigonometric
//! polynomial of degree at most `sN^j` in `x_j`) or by the histogram identity
//! `∫|f|^{2s} = Σ_v |R(v)|²`. Everything here is the periodic model with one
//! frequency per arc at `δ = 1/N`; ratios are lower-bound witnesses only.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::budget::Budget;
use crate::counting::{self, Strategy};
use crate::dyadic::DyadicInterval;
use crate::stats::CompensatedSum;
use crate::{par, Error, Result};

/// Relative change between successive grid doublings that stops the
/// bilinear Riemann sums.
pub const BILINEAR_TOLERANCE: f64 = 1e-3;
/// Doublings of every grid dimension before giving up.
pub const MAX_DOUBLINGS: u32 = 5;
const CHUNKS: u64 = 512;

/// `e(t) = exp(2πit)`.
pub fn e(t: f64) -> Complex64 {
    Complex64::cis(TAU * t)
}

/// Weights `a_1, …, a_N`; index `i` holds `a_{i+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSequence {
    a: Vec<Complex64>,
    seed: Option<u64>,
}

impl WeightSequence {
    pub fn from_values(a: Vec<Complex64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("weight sequence must have N ≥ 1 entries"));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        Ok(WeightSequence { a, seed: None })
    }

    /// From `(re, im)` pairs, as read from a weights file.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::from_values(pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect())
    }

    pub fn unit(n: usize) -> Result<Self> {
        Self::from_values(vec![Complex64::new(1.0, 0.0); n])
    }

    /// `a_n = e(u_n)` with `u_n` uniform on `[0, 1)` drawn from SplitMix64
    /// whose 64-bit state starts at `seed`.
    pub fn random_unimodular(n: usize, seed: u64) -> Result<Self> {
        let mut rng = SplitMix64::seed_from_u64(seed);
        let a = (0..n).map(|_| e(rng.random::<f64>())).collect();
        let mut w = Self::from_values(a)?;
        w.seed = Some(seed);
        Ok(w)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.a
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_unit(&self) -> bool {
        self.a.iter().all(|z| z.re == 1.0 && z.im == 0.0)
    }

    /// `Σ |a_n|²`.
    pub fn l2_norm_sq(&self) -> f64 {
        let mut sum = CompensatedSum::default();
        for z in &self.a {
            sum.add(z.norm_sqr());
        }
        sum.value()
    }

    /// Zeroes every `a_n` whose frequency `n/N` lies outside `interval`.
    pub fn restricted(&self, interval: &DyadicInterval) -> Result<Self> {
        let n = self.n() as u64;
        let mut a = self.a.clone();
        for (i, z) in a.iter_mut().enumerate() {
            if arc_of(i as u64 + 1, n, interval.level())? != *interval {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        Ok(WeightSequence { a, seed: self.seed })
    }

    /// `a_n · e(n θ₁ + n² θ₂ + ⋯ + nᵏ θ_k)` with `k = θ.len()`.
    pub fn modulated(&self, theta: &[f64]) -> Self {
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let n = i as f64 + 1.0;
                let mut power = 1.0;
                let mut phase = 0.0;
                for t in theta {
                    power *= n;
                    phase += libm::fmod(t * power, 1.0);
                }
                z * e(phase)
            })
            .collect();
        WeightSequence { a, seed: self.seed }
    }
}

/// The arc at `level` containing `n/N`, right endpoints assigned left.
pub fn arc_of(n: u64, big_n: u64, level: u32) -> Result<DyadicInterval> {
    if n == 0 || n > big_n {
        return Err(Error::invalid("frequency must lie in [1, N]"));
    }
    DyadicInterval::containing_left_closed(level, n, big_n)
}

/// `f(x)` by direct summation.
pub fn eval_weyl_sum(k: u32, w: &WeightSequence, x: &[f64]) -> Result<Complex64> {
    if x.len() != k as usize {
        return Err(Error::invalid("point dimension must equal k"));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (i, a) in w.values().iter().enumerate() {
        let n = i as f64 + 1.0;
        let mut power = 1.0;
        let mut phase = 0.0;
        for &xj in x {
            power *= n;
            phase += libm::fmod(xj * power, 1.0);
        }
        total += a * e(phase);
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    Histogram,
    Auto,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Quadrature => "quadrature",
            Method::Histogram => "histogram",
            Method::Auto => "auto",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub value: f64,
    pub method: Method,
    /// Nodes per coordinate; empty for the histogram path.
    pub grid: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RatioReport {
    pub k: u32,
    pub n: u64,
    pub p: u64,
    pub value: f64,
    pub grid: Vec<u64>,
    pub converged: bool,
    pub estimate_error: f64,
    pub method: Method,
    pub seed: Option<u64>,
}

/// Tensor grid with `dims[j]` equally spaced nodes in coordinate `j` and
/// the characters `e(r / dims[j])` tabulated.
struct Grid {
    dims: Vec<u64>,
    nodes: u64,
    tables: Vec<Vec<Complex64>>,
}

impl Grid {
    fn new(dims: Vec<u64>, budget: &Budget) -> Result<Self> {
        let nodes = dims
            .iter()
            .try_fold(1u64, |acc, &m| acc.checked_mul(m))
            .filter(|&g| g <= budget.grid && dims.iter().all(|&m| m < 1 << 32));
        let Some(nodes) = nodes else {
            let attempted = dims
                .iter()
                .fold(1u128, |acc, &m| acc.saturating_mul(u128::from(m)));
            return Err(Error::Budget {
                resource: "quadrature nodes",
                attempted,
                limit: u128::from(budget.grid),
                hint: "use the histogram identity path",
            });
        };
        let tables = dims
            .iter()
            .map(|&m| (0..m).map(|r| e(r as f64 / m as f64)).collect())
            .collect();
        Ok(Grid {
            dims,
            nodes,
            tables,
        })
    }

    /// `n^j mod M_j` for every frequency `1..=n`.
    fn residues(&self, n: usize) -> Vec<Vec<u64>> {
        (1..=n as u64)
            .map(|freq| {
                let mut power = 1u64;
                self.dims
                    .iter()
                    .map(|&m| {
                        power = ((u128::from(power) * u128::from(freq)) % u128::from(m)) as u64;
                        power
                    })
                    .collect()
            })
            .collect()
    }

    /// Mean of `integrand(f_1(x), …, f_r(x))` over the nodes, where `f_i` is
    /// the Weyl sum of `weights[i]`.
    fn mean<F>(&self, weights: &[&[Complex64]], integrand: F) -> f64
    where
        F: Fn(&[Complex64]) -> f64 + Sync + Send,
    {
        let n = weights.iter().map(|w| w.len()).max().unwrap_or(0);
        let residues = self.residues(n);
        let active: Vec<Vec<(usize, Complex64)>> = weights
            .iter()
            .map(|w| {
                w.iter()
                    .enumerate()
                    .filter(|(_, z)| z.re != 0.0 || z.im != 0.0)
                    .map(|(i, z)| (i, *z))
                    .collect()
            })
            .collect();
        // Rows fix every coordinate but the last; along a row the phase
        // index of each frequency advances by its residue.
        let last = self.dims.len() - 1;
        let inner = self.dims[last];
        let rows = self.nodes / inner;
        let chunks = rows.min(CHUNKS);
        let per = rows.div_ceil(chunks);
        let parts = par::map_range(0..chunks as usize, |c| {
            let mut sum = CompensatedSum::default();
            let mut coords = vec![0u64; last];
            let mut values = vec![Complex64::new(0.0, 0.0); active.len()];
            let mut bases: Vec<Vec<Complex64>> = active.iter().map(|l| vec![Complex64::new(0.0, 0.0); l.len()]).collect();
            let mut phases: Vec<Vec<u64>> = active.iter().map(|l| vec![0; l.len()]).collect();
            let start = c as u64 * per;
            for row in start..(start + per).min(rows) {
                let mut rest = row;
                for (slot, &m) in coords.iter_mut().zip(&self.dims) {
                    *slot = rest % m;
                    rest /= m;
                }
                for ((list, base), phase) in active.iter().zip(&mut bases).zip(&mut phases) {
                    for ((&(i, a), b), ph) in list.iter().zip(base.iter_mut()).zip(phase.iter_mut()) {
                        let mut term = a;
                        for (j, &m) in self.dims[..last].iter().enumerate() {
                            term *= self.tables[j][((residues[i][j] * coords[j]) % m) as usize];
                        }
                        *b = term;
                        *ph = 0;
                    }
                }
                for _ in 0..inner {
                    for (((value, list), base), phase) in
                        values.iter_mut().zip(&active).zip(&bases).zip(&mut phases)
                    {
                        let mut f = Complex64::new(0.0, 0.0);
                        for ((&(i, _), b), ph) in list.iter().zip(base).zip(phase.iter_mut()) {
                            f += b * self.tables[last][*ph as usize];
                            *ph += residues[i][last];
                            if *ph >= inner {
                                *ph -= inner;
                            }
                        }
                        *value = f;
                    }
                    sum.add(integrand(&values));
                }
            }
            sum
        });
        let mut total = CompensatedSum::default();
        for part in parts {
            total.merge(part);
        }
        total.value() / self.nodes as f64
    }
}

fn exact_grid_dims(k: u32, s: u32, n: u64) -> Vec<u64> {
    let mut power = 1u64;
    (0..k)
        .map(|_| {
            power = power.saturating_mul(n);
            power
                .saturating_mul(2 * u64::from(s))
                .saturating_add(1)
        })
        .collect()
}

fn check_moment_args(k: u32, s: u32) -> Result<()> {
    if k == 0 || s == 0 {
        return Err(Error::invalid("k and s must be at least 1"));
    }
    Ok(())
}

/// `∫_{[0,1]ᵏ} |f|^{2s}` by the exact tensor-grid rule.
pub fn exact_moment(k: u32, s: u32, w: &WeightSequence) -> Result<f64> {
    exact_moment_with(k, s, w, &Budget::default())
}

pub fn exact_moment_with(k: u32, s: u32, w: &WeightSequence, budget: &Budget) -> Result<f64> {
    check_moment_args(k, s)?;
    let grid = Grid::new(exact_grid_dims(k, s, w.n() as u64), budget)?;
    Ok(grid.mean(&[w.values()], |f| libm::pow(f[0].norm_sqr(), f64::from(s))))
}

/// `Σ_v |R(v)|²`; with unit weights this is the exact integer count.
pub fn histogram_moment(k: u32, s: u32, w: &WeightSequence, budget: &Budget) -> Result<f64> {
    check_moment_args(k, s)?;
    let n = w.n() as u64;
    if w.is_unit() {
        let r = counting::vinogradov_count_with(n, s, k, Strategy::Auto, budget)?;
        return Ok(r.j.to_f64().unwrap_or(f64::INFINITY));
    }
    let (energy, ..) = counting::weighted_energy(k, s, w.values(), Strategy::Auto, budget)?;
    Ok(energy.value())
}

/// `∫|f|^{2s}` by the chosen exact path. `Auto` takes the histogram identity
/// when its half-histogram fits the support budget and the grid otherwise.
pub fn moment(k: u32, s: u32, w: &WeightSequence, method: Method, budget: &Budget) -> Result<MomentReport> {
    check_moment_args(k, s)?;
    let method = match method {
        Method::Auto => {
            let n = w.n() as u64;
            if counting::support_estimate(n, s - s / 2, k) <= u128::from(budget.support) {
                Method::Histogram
            } else {
                Method::Quadrature
            }
        }
        other => other,
    };
    match method {
        Method::Histogram => Ok(MomentReport {
            value: histogram_moment(k, s, w, budget)?,
            method,
            grid: Vec::new(),
        }),
        _ => Ok(MomentReport {
            value: exact_moment_with(k, s, w, budget)?,
            method,
            grid: exact_grid_dims(k, s, w.n() as u64),
        }),
    }
}

/// `p_k = k(k+1)`.
fn critical(k: u32) -> Result<u64> {
    crate::exponents::critical_exponent(k)
}

/// `D = (∫|f|^{p})^{1/p} / (Σ|a_n|²)^{1/2}` with `p = k(k+1)`.
pub fn decoupling_ratio(k: u32, w: &WeightSequence) -> Result<RatioReport> {
    decoupling_ratio_with(k, w, Method::Auto, &Budget::default())
}

pub fn decoupling_ratio_with(
    k: u32,
    w: &WeightSequence,
    method: Method,
    budget: &Budget,
) -> Result<RatioReport> {
    let p = critical(k)?;
    let norm_sq = w.l2_norm_sq();
    if norm_sq == 0.0 {
        return Err(Error::invalid("weights must not all vanish"));
    }
    let m = moment(k, (p / 2) as u32, w, method, budget)?;
    let value = libm::exp(libm::log(m.value) / p as f64 - libm::log(norm_sq) / 2.0);
    Ok(RatioReport {
        k,
        n: w.n() as u64,
        p,
        value,
        grid: m.grid,
        converged: true,
        estimate_error: 0.0,
        method: m.method,
        seed: w.seed(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    Unit,
    Random(u64),
}

impl WeightMode {
    pub fn weights(&self, n: usize) -> Result<WeightSequence> {
        match *self {
            WeightMode::Unit => WeightSequence::unit(n),
            WeightMode::Random(seed) => WeightSequence::random_unimodular(n, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthReport {
    pub k: u32,
    pub rows: Vec<(u64, Result<RatioReport>)>,
    /// Least-squares slope of `log D` against `log N` over successful rows.
    pub slope: Option<f64>,
}

pub fn growth_exponent(k: u32, ns: &[u64], mode: WeightMode) -> Result<GrowthReport> {
    growth_exponent_with(k, ns, mode, &Budget::default())
}

pub fn growth_exponent_with(k: u32, ns: &[u64], mode: WeightMode, budget: &Budget) -> Result<GrowthReport> {
    if ns.len() < 3 {
        return Err(Error::invalid("growth fit needs at least three values of N"));
    }
    if ns.windows(2).any(|pair| pair[0] >= pair[1]) || ns[0] == 0 {
        return Err(Error::invalid("N list must be positive and strictly ascending"));
    }
    critical(k)?;
    let rows: Vec<(u64, Result<RatioReport>)> = ns
        .iter()
        .map(|&n| {
            let report = mode
                .weights(n as usize)
                .and_then(|w| decoupling_ratio_with(k, &w, Method::Auto, budget));
            (n, report)
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|(n, r)| r.as_ref().ok().map(|r| (libm::log(*n as f64), libm::log(r.value))))
        .unzip();
    Ok(GrowthReport {
        k,
        slope: crate::least_squares_slope(&xs, &ys),
        rows,
    })
}

fn check_separated(i: &DyadicInterval, j: &DyadicInterval) -> Result<()> {
    if i.distance(j) < 0.25 {
        return Err(Error::invalid(alloc::format!(
            "arcs {i} and {j} are closer than 1/4"
        )));
    }
    Ok(())
}

fn restricted_pair(
    w: &WeightSequence,
    i: &DyadicInterval,
    j: &DyadicInterval,
) -> Result<(WeightSequence, WeightSequence)> {
    check_separated(i, j)?;
    Ok((w.restricted(i)?, w.restricted(j)?))
}

/// `B = ∫|f_I|^{p/2}|f_{I′}|^{p/2} / (‖a_I‖₂‖a_{I′}‖₂)^{p/2}` by Riemann sums,
/// doubling every grid dimension until the relative change drops below
/// [`BILINEAR_TOLERANCE`].
pub fn bilinear_ratio(
    k: u32,
    i: &DyadicInterval,
    j: &DyadicInterval,
    w: &WeightSequence,
) -> Result<RatioReport> {
    bilinear_ratio_with(k, i, j, w, &Budget::default())
}

pub fn bilinear_ratio_with(
    k: u32,
    i: &DyadicInterval,
    j: &DyadicInterval,
    w: &WeightSequence,
    budget: &Budget,
) -> Result<RatioReport> {
    let p = critical(k)?;
    let n = w.n() as u64;
    let (wi, wj) = restricted_pair(w, i, j)?;
    let (ni, nj) = (wi.l2_norm_sq(), wj.l2_norm_sq());
    let mut report = RatioReport {
        k,
        n,
        p,
        value: 0.0,
        grid: Vec::new(),
        converged: true,
        estimate_error: 0.0,
        method: Method::Quadrature,
        seed: w.seed(),
    };
    if ni == 0.0 || nj == 0.0 {
        return Ok(report);
    }
    let half = p as f64 / 4.0;
    let integrand = |f: &[Complex64]| libm::pow(f[0].norm_sqr() * f[1].norm_sqr(), half);
    let scale = libm::pow(ni * nj, half);
    let mut dims = exact_grid_dims(k, (p / 2) as u32, n);
    let mut previous: Option<f64> = None;
    for _ in 0..=MAX_DOUBLINGS {
        let grid = match Grid::new(dims.clone(), budget) {
            Ok(g) => g,
            Err(_) if previous.is_some() => {
                report.converged = false;
                return Ok(report);
            }
            Err(err) => return Err(err),
        };
        let value = grid.mean(&[wi.values(), wj.values()], integrand) / scale;
        report.value = value;
        report.grid = dims.clone();
        if let Some(prev) = previous {
            let change = libm::fabs(value - prev) / libm::fmax(libm::fabs(value), f64::MIN_POSITIVE);
            report.estimate_error = change;
            if change < BILINEAR_TOLERANCE {
                return Ok(report);
            }
        }
        previous = Some(value);
        dims.iter_mut().for_each(|m| *m *= 2);
    }
    report.converged = false;
    Ok(report)
}

/// `D_I^{p/2} · D_{I′}^{p/2}`, the Cauchy–Schwarz ceiling for
/// [`bilinear_ratio`], from exact moments of the two pieces.
pub fn bilinear_ceiling(
    k: u32,
    i: &DyadicInterval,
    j: &DyadicInterval,
    w: &WeightSequence,
    budget: &Budget,
) -> Result<f64> {
    let p = critical(k)?;
    let (wi, wj) = restricted_pair(w, i, j)?;
    if wi.l2_norm_sq() == 0.0 || wj.l2_norm_sq() == 0.0 {
        return Ok(0.0);
    }
    let di = decoupling_ratio_with(k, &wi, Method::Auto, budget)?.value;
    let dj = decoupling_ratio_with(k, &wj, Method::Auto, budget)?.value;
    Ok(libm::pow(di * dj, p as f64 / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        libm::fabs(a - b) <= rel * libm::fmax(libm::fabs(a), libm::fabs(b))
    }

    fn arc(level: u32, index: u64) -> DyadicInterval {
        DyadicInterval::new(level, index).unwrap()
    }

    #[test]
    fn weyl_sum_examples() {
        let w = WeightSequence::random_unimodular(7, 3).unwrap();
        let at_zero = eval_weyl_sum(3, &w, &[0.0; 3]).unwrap();
        let total: Complex64 = w.values().iter().sum();
        assert!((at_zero - total).norm() < 1e-12);

        let mut single = vec![Complex64::new(0.0, 0.0); 5];
        single[3] = Complex64::new(0.6, -0.8);
        let single = WeightSequence::from_values(single).unwrap();
        for x in [[0.1, 0.7], [0.33, 0.9], [0.5, 0.25]] {
            let f = eval_weyl_sum(2, &single, &x).unwrap();
            assert!((f.norm() - 1.0).abs() < 1e-12);
        }

        let unit = WeightSequence::unit(2).unwrap();
        assert!(eval_weyl_sum(1, &unit, &[0.5]).unwrap().norm() < 1e-12);
        assert!(eval_weyl_sum(2, &unit, &[0.5]).is_err());
    }

    #[test]
    fn weights_validate() {
        assert!(WeightSequence::from_values(Vec::new()).is_err());
        assert!(WeightSequence::from_values(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        let a = WeightSequence::random_unimodular(16, 42).unwrap();
        let b = WeightSequence::random_unimodular(16, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed(), Some(42));
        assert_ne!(a, WeightSequence::random_unimodular(16, 43).unwrap());
        for z in a.values() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_matches_direct_evaluation() {
        let w = WeightSequence::random_unimodular(4, 9).unwrap();
        let grid = Grid::new(vec![5, 7], &Budget::default()).unwrap();
        let mut direct = 0.0;
        for m2 in 0..7 {
            for m1 in 0..5 {
                let x = [m1 as f64 / 5.0, m2 as f64 / 7.0];
                direct += eval_weyl_sum(2, &w, &x).unwrap().norm_sqr();
            }
        }
        let mean = grid.mean(&[w.values()], |f| f[0].norm_sqr());
        assert!(close(mean, direct / 35.0, 1e-12));
    }

    #[test]
    fn moments_match_counts() {
        assert!(close(exact_moment(2, 3, &WeightSequence::unit(2).unwrap()).unwrap(), 20.0, 1e-12));
        let w = WeightSequence::unit(4).unwrap();
        let j = counting::vinogradov_count(4, 3, 2).unwrap().j.to_f64().unwrap();
        assert!(close(exact_moment(2, 3, &w).unwrap(), j, 1e-9));

        let w = WeightSequence::random_unimodular(5, 1).unwrap();
        let budget = Budget::default();
        for (k, s) in [(1, 2), (2, 2), (2, 3), (3, 2)] {
            let quad = exact_moment(k, s, &w).unwrap();
            let hist = histogram_moment(k, s, &w, &budget).unwrap();
            assert!(close(quad, hist, 1e-10), "k={k} s={s}");
        }
    }

    #[test]
    fn parseval_small() {
        for k in 1..=3 {
            for n in [1usize, 3, 8] {
                let w = WeightSequence::random_unimodular(n, 17 + n as u64).unwrap();
                let norm = w.l2_norm_sq();
                assert!(close(exact_moment(k, 1, &w).unwrap(), norm, 1e-12));
                let m = moment(k, 1, &w, Method::Histogram, &Budget::default()).unwrap();
                assert!(close(m.value, norm, 1e-12));
            }
        }
    }

    #[test]
    fn over_budget_grid() {
        let w = WeightSequence::unit(24).unwrap();
        let err = exact_moment(3, 6, &w).unwrap_err();
        assert!(matches!(err, Error::Budget { hint, .. } if hint.contains("histogram")));
        let m = moment(3, 6, &w, Method::Auto, &Budget::default()).unwrap();
        assert_eq!(m.method, Method::Histogram);
    }

    #[test]
    fn ratio_examples() {
        let w = WeightSequence::random_unimodular(9, 5).unwrap();
        assert!(close(decoupling_ratio(1, &w).unwrap().value, 1.0, 1e-12));
        let d = decoupling_ratio(2, &WeightSequence::unit(2).unwrap()).unwrap();
        let expected = libm::pow(20.0, 1.0 / 6.0) / libm::sqrt(2.0);
        assert!(close(d.value, expected, 1e-12));
        assert!((d.value - 1.1650).abs() < 1e-4);

        let mut single = vec![Complex64::new(0.0, 0.0); 6];
        single[2] = Complex64::new(0.0, 2.0);
        let single = WeightSequence::from_values(single).unwrap();
        assert!(close(decoupling_ratio(2, &single).unwrap().value, 1.0, 1e-12));
        assert!(decoupling_ratio(2, &WeightSequence::from_values(vec![Complex64::new(0.0, 0.0)]).unwrap()).is_err());
    }

    #[test]
    fn methods_agree_on_ratios() {
        let budget = Budget::default();
        for seed in 0..3 {
            let w = WeightSequence::random_unimodular(6, seed).unwrap();
            let q = decoupling_ratio_with(2, &w, Method::Quadrature, &budget).unwrap();
            let h = decoupling_ratio_with(2, &w, Method::Histogram, &budget).unwrap();
            assert!(close(q.value, h.value, 1e-10));
            assert_eq!(h.grid, Vec::<u64>::new());
            assert_eq!(q.grid, vec![37, 217]);
        }
    }

    #[test]
    fn growth_validation_and_k1() {
        assert!(growth_exponent(2, &[4, 8], WeightMode::Unit).is_err());
        assert!(growth_exponent(2, &[8, 4, 16], WeightMode::Unit).is_err());
        let g = growth_exponent(1, &[3, 7, 20, 64], WeightMode::Unit).unwrap();
        assert_eq!(g.slope, Some(0.0));
        let g = growth_exponent(1, &[3, 7, 20], WeightMode::Random(1)).unwrap();
        assert!(g.slope.unwrap().abs() < 1e-12);
    }

    #[test]
    fn arcs() {
        assert_eq!(arc_of(2, 8, 2).unwrap(), arc(2, 0));
        assert_eq!(arc_of(3, 8, 2).unwrap(), arc(2, 1));
        assert_eq!(arc_of(8, 8, 2).unwrap(), arc(2, 3));
        assert!(arc_of(0, 8, 2).is_err());
        let w = WeightSequence::unit(8).unwrap().restricted(&arc(2, 2)).unwrap();
        let live: Vec<usize> = w
            .values()
            .iter()
            .enumerate()
            .filter(|(_, z)| z.re != 0.0)
            .map(|(i, _)| i + 1)
            .collect();
        assert_eq!(live, vec![5, 6]);
    }

    #[test]
    fn bilinear_basics() {
        let w = WeightSequence::unit(8).unwrap();
        assert!(bilinear_ratio(2, &arc(2, 0), &arc(2, 1), &w).is_err());

        let mut only_low = vec![Complex64::new(0.0, 0.0); 8];
        only_low[0] = Complex64::new(1.0, 0.0);
        let only_low = WeightSequence::from_values(only_low).unwrap();
        let r = bilinear_ratio(2, &arc(2, 0), &arc(2, 2), &only_low).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.converged);

        let r = bilinear_ratio(2, &arc(2, 0), &arc(2, 2), &w).unwrap();
        assert!(r.converged);
        let ceiling = bilinear_ceiling(2, &arc(2, 0), &arc(2, 2), &w, &Budget::default()).unwrap();
        assert!(r.value <= ceiling * (1.0 + r.estimate_error));
    }

    #[test]
    fn bilinear_k1_is_exact() {
        // For k = 1, p/2 = 1 and |f_I||f_I'| integrates to a positive quantity
        // bounded by Cauchy–Schwarz with ceiling 1.
        let w = WeightSequence::random_unimodular(8, 11).unwrap();
        let r = bilinear_ratio(1, &arc(2, 0), &arc(2, 3), &w).unwrap();
        assert!(r.converged);
        assert!(r.value > 0.0 && r.value <= 1.0 + r.estimate_error);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ratio_at_least_one(n in 1usize..9, seed in any::<u64>(), k in 1u32..3) {
            let w = WeightSequence::random_unimodular(n, seed).unwrap();
            prop_assert!(decoupling_ratio(k, &w).unwrap().value >= 1.0 - 1e-12);
        }

        #[test]
        fn modulation_invariance(
            n in 1usize..7,
            seed in any::<u64>(),
            t1 in 0.0f64..1.0,
            t2 in 0.0f64..1.0,
        ) {
            let w = WeightSequence::random_unimodular(n, seed).unwrap();
            let shifted = w.modulated(&[t1, t2]);
            let budget = Budget::default();
            for method in [Method::Quadrature, Method::Histogram] {
                let a = moment(2, 3, &w, method, &budget).unwrap().value;
                let b = moment(2, 3, &shifted, method, &budget).unwrap().value;
                prop_assert!(close(a, b, 1e-9));
            }
            let a = decoupling_ratio(2, &w).unwrap().value;
            let b = decoupling_ratio(2, &shifted).unwrap().value;
            prop_assert!(close(a, b, 1e-9));
        }
    }
}
