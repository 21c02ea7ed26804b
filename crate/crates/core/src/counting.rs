//! Vinogradov mean values `J_{s,k}(N)` by power-sum histogram convolution.
//!
//! `J = Σ_v r(v)²` where `r(v)` counts the `s`-tuples in `[1, N]^s` whose
//! power-sum vector is `v`. Two engines compute it:
//!
//! * **fold** materializes the `s`-fold histogram by convolving with the
//!   single-element distribution `s` times;
//! * **meet in the middle** builds the `⌊s/2⌋`- and `⌈s/2⌉`-fold histograms,
//!   groups both by their first coordinate and convolves one first-coordinate
//!   slice of the full histogram at a time, so the `s`-fold table never exists
//!   in memory at once.
//!
//! Keys are packed into one `u64` by mixed radix `s·N^j + 1` when that fits;
//! packed keys then add without carries. Otherwise they fall back to vectors.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::hash::Hash;

use hashbrown::HashMap;
use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use rustc_hash::FxBuildHasher;

use crate::budget::Budget;
use crate::stats::CompensatedSum;
use crate::{par, Error, Result};

pub type Table = HashMap<Vec<u64>, BigUint, FxBuildHasher>;
type Map<K, W> = HashMap<K, W, FxBuildHasher>;

const FOLD_CHUNKS: usize = 32;

/// Multiplicity function `r` of power-sum vectors of `s`-tuples from `[1, N]`.
#[derive(Clone, Debug)]
pub struct PowerSumHistogram {
    pub k: u32,
    pub s: u32,
    pub n: u64,
    table: Table,
}

impl PowerSumHistogram {
    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn get(&self, v: &[u64]) -> Option<&BigUint> {
        self.table.get(v)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// `Σ_v r(v)`, which must equal `N^s`.
    pub fn mass(&self) -> BigUint {
        self.table.values().sum()
    }

    /// `Σ_v r(v)² = J_{s,k}(N)`.
    pub fn energy(&self) -> BigUint {
        self.table.values().map(|r| r * r).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Fold,
    MeetInTheMiddle,
    /// Meet in the middle whenever `s ≥ 2`: its peak table is the
    /// `⌈s/2⌉`-fold histogram plus one slice.
    Auto,
}

impl Strategy {
    fn resolve(self, s: u32) -> Strategy {
        match self {
            Strategy::Auto if s >= 2 => Strategy::MeetInTheMiddle,
            Strategy::Auto => Strategy::Fold,
            other => other,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Fold => "fold",
            Strategy::MeetInTheMiddle => "meet-in-the-middle",
            Strategy::Auto => "auto",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub k: u32,
    pub s: u32,
    pub n: u64,
    pub j: BigUint,
    pub distinct_vectors: u64,
    /// Wall time; only measured when the `std` feature is on.
    pub elapsed_ms: Option<u64>,
    pub strategy: Strategy,
}

/// `s·N^j` for `j = 1..k`, the largest value of each power-sum coordinate.
fn coordinate_bounds(n: u64, s: u32, k: u32) -> Result<Vec<u64>> {
    if n == 0 || s == 0 || k == 0 {
        return Err(Error::invalid("N, s and k must all be at least 1"));
    }
    let mut bounds = Vec::with_capacity(k as usize);
    let mut power = 1u64;
    for _ in 0..k {
        power = power
            .checked_mul(n)
            .ok_or_else(|| Error::invalid("N^k does not fit in 64 bits"))?;
        bounds.push(
            power
                .checked_mul(u64::from(s))
                .ok_or_else(|| Error::invalid("s·N^k does not fit in 64 bits"))?,
        );
    }
    Ok(bounds)
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// Component `j` is `Σ_i n_i^j`.
pub fn power_sum_vector(tuple: &[u64], n: u64, k: u32) -> Result<Vec<u64>> {
    if let Some(bad) = tuple.iter().find(|&&x| x == 0 || x > n) {
        return Err(Error::invalid(alloc::format!("entry {bad} lies outside [1, {n}]")));
    }
    let s = u32::try_from(tuple.len()).map_err(|_| Error::invalid("tuple too long"))?;
    coordinate_bounds(n, s.max(1), k)?;
    let mut out = vec![0u64; k as usize];
    for &x in tuple {
        let mut power = 1u64;
        for slot in out.iter_mut() {
            power *= x;
            *slot += power;
        }
    }
    Ok(out)
}

/// Upper bound on the number of distinct power-sum vectors of `h`-tuples:
/// the number of multisets, capped by the box of attainable coordinates.
pub fn support_estimate(n: u64, h: u32, k: u32) -> u128 {
    if h == 0 {
        return 1;
    }
    let mut multisets: u128 = 1;
    for i in 0..u128::from(h) {
        multisets = match multisets.checked_mul(u128::from(n) + i) {
            Some(x) => x / (i + 1),
            None => u128::MAX,
        };
        if multisets == u128::MAX {
            break;
        }
    }
    let mut box_size: u128 = 1;
    let mut power: u128 = 1;
    for _ in 0..k {
        power = power.saturating_mul(u128::from(n));
        let span = u128::from(h)
            .saturating_mul(power - 1)
            .saturating_add(1);
        box_size = box_size.saturating_mul(span);
    }
    multisets.min(box_size)
}

pub(crate) trait Weight: Clone + Send + Sync {
    type Energy: Send;
    fn nil() -> Self;
    fn unit() -> Self;
    fn is_nil(&self) -> bool;
    fn add_assign(&mut self, other: &Self);
    fn add_product(&mut self, a: &Self, b: &Self);
    fn energy_zero() -> Self::Energy;
    fn energy_add(energy: &mut Self::Energy, x: &Self);
    fn energy_merge(energy: &mut Self::Energy, other: Self::Energy);
}

/// Integer weights with an exact conversion to `BigUint`.
pub(crate) trait Count: Weight {
    fn to_big(&self) -> BigUint;
    fn energy_to_big(energy: Self::Energy) -> BigUint;
}

/// `u128` running sum that spills into a `BigUint` on overflow.
#[derive(Default)]
pub(crate) struct WideSum {
    low: u128,
    high: BigUint,
}

impl WideSum {
    fn add(&mut self, x: u128) {
        match self.low.checked_add(x) {
            Some(v) => self.low = v,
            None => {
                self.high += self.low;
                self.low = x;
            }
        }
    }
}

/// Exact as long as `N^s` fits: every `r(v)` and every partial sum is at most `N^s`.
impl Weight for u64 {
    type Energy = WideSum;
    fn nil() -> Self {
        0
    }
    fn unit() -> Self {
        1
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += *a * *b;
    }
    fn energy_zero() -> WideSum {
        WideSum::default()
    }
    fn energy_add(energy: &mut WideSum, x: &Self) {
        energy.add(u128::from(*x) * u128::from(*x));
    }
    fn energy_merge(energy: &mut WideSum, other: WideSum) {
        energy.high += other.high;
        energy.add(other.low);
    }
}

impl Count for u64 {
    fn to_big(&self) -> BigUint {
        BigUint::from(*self)
    }
    fn energy_to_big(energy: WideSum) -> BigUint {
        energy.high + energy.low
    }
}

impl Weight for BigUint {
    type Energy = BigUint;
    fn nil() -> Self {
        BigUint::zero()
    }
    fn unit() -> Self {
        BigUint::one()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += a * b;
    }
    fn energy_zero() -> BigUint {
        BigUint::zero()
    }
    fn energy_add(energy: &mut BigUint, x: &Self) {
        *energy += x * x;
    }
    fn energy_merge(energy: &mut BigUint, other: BigUint) {
        *energy += other;
    }
}

impl Count for BigUint {
    fn to_big(&self) -> BigUint {
        self.clone()
    }
    fn energy_to_big(energy: BigUint) -> BigUint {
        energy
    }
}

impl Weight for Complex64 {
    type Energy = CompensatedSum;
    fn nil() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn unit() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_nil(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add_assign(&mut self, other: &Self) {
        *self += *other;
    }
    fn add_product(&mut self, a: &Self, b: &Self) {
        *self += *a * *b;
    }
    fn energy_zero() -> CompensatedSum {
        CompensatedSum::default()
    }
    fn energy_add(energy: &mut CompensatedSum, x: &Self) {
        energy.add(x.norm_sqr());
    }
    fn energy_merge(energy: &mut CompensatedSum, other: CompensatedSum) {
        energy.merge(other);
    }
}

trait Codec: Sync {
    type Key: Clone + Eq + Hash + Send + Sync;
    fn encode(&self, coords: &[u64]) -> Self::Key;
    fn decode(&self, key: &Self::Key) -> Vec<u64>;
    fn add(&self, a: &Self::Key, b: &Self::Key) -> Self::Key;
}

/// Mixed-radix packing into one word. Sums of keys whose coordinates stay
/// within the bounds never carry, so key addition is integer addition.
struct WordCodec {
    radices: Vec<u64>,
}

impl WordCodec {
    fn new(bounds: &[u64]) -> Option<Self> {
        let mut product = 1u64;
        let mut radices = Vec::with_capacity(bounds.len());
        for &b in bounds {
            let r = b.checked_add(1)?;
            product = product.checked_mul(r)?;
            radices.push(r);
        }
        Some(WordCodec { radices })
    }
}

impl Codec for WordCodec {
    type Key = u64;
    fn encode(&self, coords: &[u64]) -> u64 {
        coords
            .iter()
            .zip(&self.radices)
            .rev()
            .fold(0, |key, (&c, &r)| key * r + c)
    }
    fn decode(&self, key: &u64) -> Vec<u64> {
        let mut key = *key;
        self.radices
            .iter()
            .map(|&r| {
                let c = key % r;
                key /= r;
                c
            })
            .collect()
    }
    fn add(&self, a: &u64, b: &u64) -> u64 {
        a + b
    }
}

struct VecCodec;

impl Codec for VecCodec {
    type Key = Box<[u64]>;
    fn encode(&self, coords: &[u64]) -> Box<[u64]> {
        coords.into()
    }
    fn decode(&self, key: &Box<[u64]>) -> Vec<u64> {
        key.to_vec()
    }
    fn add(&self, a: &Box<[u64]>, b: &Box<[u64]>) -> Box<[u64]> {
        a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
    }
}

fn curve_point(n: u64, k: u32) -> Vec<u64> {
    let mut power = 1u64;
    (0..k)
        .map(|_| {
            power *= n;
            power
        })
        .collect()
}

fn budget_error(resource: &'static str, attempted: u128, limit: u64, hint: &'static str) -> Error {
    Error::Budget {
        resource,
        attempted,
        limit: u128::from(limit),
        hint,
    }
}

fn check_support(n: u64, h: u32, k: u32, budget: &Budget) -> Result<()> {
    let estimate = support_estimate(n, h, k);
    if estimate > u128::from(budget.support) {
        return Err(budget_error(
            "histogram support",
            estimate,
            budget.support,
            "lower N or s, or raise the support budget",
        ));
    }
    Ok(())
}

/// `rounds`-fold self-convolution of `base`; `rounds = 0` gives `{zero ↦ 1}`.
fn fold<K, W, A>(base: &[(K, W)], zero: K, rounds: u32, add: A) -> Map<K, W>
where
    K: Clone + Eq + Hash + Send + Sync,
    W: Weight,
    A: Fn(&K, &K) -> K + Sync + Send,
{
    let mut current: Map<K, W> = Map::default();
    current.insert(zero, W::unit());
    for _ in 0..rounds {
        let entries: Vec<(&K, &W)> = current.iter().collect();
        let chunk = entries.len().div_ceil(FOLD_CHUNKS).max(1);
        let parts = par::map_range(0..entries.len().div_ceil(chunk), |c| {
            let mut part: Map<K, W> = Map::default();
            for &(key, w) in &entries[c * chunk..((c + 1) * chunk).min(entries.len())] {
                for (bk, bw) in base {
                    part.entry(add(key, bk))
                        .or_insert_with(W::nil)
                        .add_product(w, bw);
                }
            }
            part
        });
        let mut parts = parts.into_iter();
        let mut next = parts.next().unwrap_or_default();
        for part in parts {
            for (key, w) in part {
                next.entry(key).or_insert_with(W::nil).add_assign(&w);
            }
        }
        current = next;
    }
    current
}

fn base_entries<C: Codec, W: Weight>(codec: &C, k: u32, weights: &[W]) -> Vec<(C::Key, W)> {
    weights
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_nil())
        .map(|(i, w)| (codec.encode(&curve_point(i as u64 + 1, k)), w.clone()))
        .collect()
}

fn fold_energy<C: Codec, W: Weight>(
    codec: &C,
    k: u32,
    s: u32,
    weights: &[W],
) -> (W::Energy, u64) {
    let base = base_entries(codec, k, weights);
    let zero = codec.encode(&vec![0; k as usize]);
    let table = fold(&base, zero, s, |a, b| codec.add(a, b));
    let mut energy = W::energy_zero();
    for w in table.values() {
        W::energy_add(&mut energy, w);
    }
    (energy, table.len() as u64)
}

/// A histogram grouped by first coordinate: `slots[v1 − min]` lists the
/// remaining packed coordinates with their weights.
struct Grouped<K, W> {
    min: u64,
    slots: Vec<Vec<(K, W)>>,
}

fn group<K: Clone + Eq + Hash, W>(table: Map<(u64, K), W>) -> Grouped<K, W> {
    let Some(min) = table.keys().map(|(v1, _)| *v1).min() else {
        return Grouped {
            min: 0,
            slots: Vec::new(),
        };
    };
    let max = table.keys().map(|(v1, _)| *v1).max().unwrap_or(min);
    let mut slots: Vec<Vec<(K, W)>> = (min..=max).map(|_| Vec::new()).collect();
    for ((v1, rest), w) in table {
        slots[(v1 - min) as usize].push((rest, w));
    }
    Grouped { min, slots }
}

fn half_histogram<C: Codec, W: Weight>(
    codec: &C,
    k: u32,
    h: u32,
    weights: &[W],
) -> Grouped<C::Key, W> {
    let base: Vec<((u64, C::Key), W)> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_nil())
        .map(|(i, w)| {
            let point = curve_point(i as u64 + 1, k);
            ((point[0], codec.encode(&point[1..])), w.clone())
        })
        .collect();
    let zero = (0, codec.encode(&vec![0; k as usize - 1]));
    group(fold(&base, zero, h, |a, b| (a.0 + b.0, codec.add(&a.1, &b.1))))
}

fn mitm_energy<C: Codec, W: Weight>(
    codec: &C,
    k: u32,
    s: u32,
    weights: &[W],
) -> (W::Energy, u64) {
    let lo_rounds = s / 2;
    let hi_rounds = s - lo_rounds;
    let hi = half_histogram(codec, k, hi_rounds, weights);
    let lo_owned;
    let lo = if lo_rounds == hi_rounds {
        &hi
    } else {
        lo_owned = half_histogram(codec, k, lo_rounds, weights);
        &lo_owned
    };
    if lo.slots.is_empty() || hi.slots.is_empty() {
        return (W::energy_zero(), 0);
    }
    let first = lo.min + hi.min;
    let count = lo.slots.len() + hi.slots.len() - 1;
    let slices = par::map_range(0..count, |i| {
        let t = first + i as u64;
        let mut slice: Map<C::Key, W> = Map::default();
        for (ia, ga) in lo.slots.iter().enumerate() {
            let u = lo.min + ia as u64;
            if ga.is_empty() || t < u + hi.min {
                continue;
            }
            let Some(gb) = hi.slots.get((t - u - hi.min) as usize) else {
                continue;
            };
            for (ka, wa) in ga {
                for (kb, wb) in gb {
                    slice
                        .entry(codec.add(ka, kb))
                        .or_insert_with(W::nil)
                        .add_product(wa, wb);
                }
            }
        }
        let mut energy = W::energy_zero();
        for w in slice.values() {
            W::energy_add(&mut energy, w);
        }
        (energy, slice.len() as u64)
    });
    let mut energy = W::energy_zero();
    let mut distinct = 0;
    for (e, d) in slices {
        W::energy_merge(&mut energy, e);
        distinct += d;
    }
    (energy, distinct)
}

/// `Σ_v |R(v)|²` with `R(v) = Σ ∏ w_{n_i}` over `s`-tuples with power-sum
/// vector `v`; `weights[i]` belongs to frequency `i + 1`.
pub(crate) fn weighted_energy<W: Weight>(
    k: u32,
    s: u32,
    weights: &[W],
    strategy: Strategy,
    budget: &Budget,
) -> Result<(W::Energy, u64, Strategy)> {
    let n = weights.len() as u64;
    let bounds = coordinate_bounds(n, s, k)?;
    let strategy = strategy.resolve(s);
    match strategy {
        Strategy::MeetInTheMiddle => {
            check_support(n, s - s / 2, k, budget)?;
            let (e, d) = match WordCodec::new(&bounds[1..]) {
                Some(codec) => mitm_energy(&codec, k, s, weights),
                None => mitm_energy(&VecCodec, k, s, weights),
            };
            Ok((e, d, strategy))
        }
        _ => {
            check_support(n, s, k, budget)?;
            let (e, d) = match WordCodec::new(&bounds) {
                Some(codec) => fold_energy(&codec, k, s, weights),
                None => fold_energy(&VecCodec, k, s, weights),
            };
            Ok((e, d, strategy))
        }
    }
}

fn table_from<C: Codec, W: Count>(codec: &C, k: u32, s: u32, n: u64) -> Table {
    let weights = vec![W::unit(); n as usize];
    let base = base_entries(codec, k, &weights);
    let zero = codec.encode(&vec![0; k as usize]);
    fold(&base, zero, s, |a, b| codec.add(a, b))
        .into_iter()
        .map(|(key, w)| (codec.decode(&key), w.to_big()))
        .collect()
}

pub fn build_histogram(n: u64, s: u32, k: u32) -> Result<PowerSumHistogram> {
    build_histogram_with(n, s, k, &Budget::default())
}

pub fn build_histogram_with(n: u64, s: u32, k: u32, budget: &Budget) -> Result<PowerSumHistogram> {
    let bounds = coordinate_bounds(n, s, k)?;
    check_support(n, s, k, budget)?;
    let small = checked_pow(n, s).is_some();
    let table = match (WordCodec::new(&bounds), small) {
        (Some(c), true) => table_from::<_, u64>(&c, k, s, n),
        (Some(c), false) => table_from::<_, BigUint>(&c, k, s, n),
        (None, true) => table_from::<_, u64>(&VecCodec, k, s, n),
        (None, false) => table_from::<_, BigUint>(&VecCodec, k, s, n),
    };
    Ok(PowerSumHistogram { k, s, n, table })
}

#[cfg(feature = "std")]
struct Stopwatch(std::time::Instant);

#[cfg(feature = "std")]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch(std::time::Instant::now())
    }
    fn millis(&self) -> Option<u64> {
        u64::try_from(self.0.elapsed().as_millis()).ok()
    }
}

#[cfg(not(feature = "std"))]
struct Stopwatch;

#[cfg(not(feature = "std"))]
impl Stopwatch {
    fn start() -> Self {
        Stopwatch
    }
    fn millis(&self) -> Option<u64> {
        None
    }
}

fn exact_energy<W: Count>(
    n: u64,
    s: u32,
    k: u32,
    strategy: Strategy,
    budget: &Budget,
) -> Result<(BigUint, u64, Strategy)> {
    let weights = vec![W::unit(); n as usize];
    let (e, d, used) = weighted_energy(k, s, &weights, strategy, budget)?;
    Ok((W::energy_to_big(e), d, used))
}

pub fn vinogradov_count(n: u64, s: u32, k: u32) -> Result<CountResult> {
    vinogradov_count_with(n, s, k, Strategy::Auto, &Budget::default())
}

pub fn vinogradov_count_with(
    n: u64,
    s: u32,
    k: u32,
    strategy: Strategy,
    budget: &Budget,
) -> Result<CountResult> {
    coordinate_bounds(n, s, k)?;
    let clock = Stopwatch::start();
    let (j, distinct_vectors, strategy) = if checked_pow(n, s).is_some() {
        exact_energy::<u64>(n, s, k, strategy, budget)?
    } else {
        exact_energy::<BigUint>(n, s, k, strategy, budget)?
    };
    Ok(CountResult {
        k,
        s,
        n,
        j,
        distinct_vectors,
        elapsed_ms: clock.millis(),
        strategy,
    })
}

pub fn brute_force_count(n: u64, s: u32, k: u32) -> Result<BigUint> {
    brute_force_count_with(n, s, k, Budget::DEFAULT_BRUTE_FORCE)
}

/// Enumerates every `2s`-tuple and checks the `k` equations directly.
pub fn brute_force_count_with(n: u64, s: u32, k: u32, limit: u64) -> Result<BigUint> {
    coordinate_bounds(n, s, k)?;
    let total = s
        .checked_mul(2)
        .and_then(|e| checked_pow(n, e))
        .filter(|&t| t <= limit)
        .ok_or_else(|| {
            let attempted = libm::pow(n as f64, 2.0 * f64::from(s));
            budget_error(
                "brute-force tuples",
                if attempted >= u128::MAX as f64 { u128::MAX } else { attempted as u128 },
                limit,
                "use vinogradov_count",
            )
        })?;
    debug_assert!(total <= limit);
    let half = n.pow(s) as usize;
    let kk = k as usize;
    // Power-sum vectors of every s-tuple, in odometer order.
    let mut sums = Vec::with_capacity(half * kk);
    let mut tuple = vec![1u64; s as usize];
    for _ in 0..half {
        sums.extend(power_sum_vector(&tuple, n, k)?);
        for digit in tuple.iter_mut() {
            if *digit < n {
                *digit += 1;
                break;
            }
            *digit = 1;
        }
    }
    let sums = &sums;
    let counts = par::map_range(0..half, |i| {
        let left = &sums[i * kk..(i + 1) * kk];
        sums.chunks_exact(kk).filter(|right| *right == left).count() as u64
    });
    Ok(BigUint::from(counts.iter().sum::<u64>()))
}

/// `ln x` for arbitrarily large `x > 0`.
pub(crate) fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return libm::log(x.to_f64().unwrap_or(f64::INFINITY));
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    libm::log(top) + shift as f64 * core::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub n: u64,
    pub outcome: core::result::Result<(CountResult, f64), Error>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeanValueScan {
    pub s: u32,
    pub k: u32,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `log J` against `log N` over successful rows.
    pub slope_log_j: Option<f64>,
    /// Least-squares slope of `log ρ` against `log N`.
    pub slope_log_rho: Option<f64>,
}

/// `ρ = J / (N^s + N^{max(0, 2s − k(k+1)/2)})`.
pub fn normalized_mean_value(j: &BigUint, n: u64, s: u32, k: u32) -> f64 {
    let half = u64::from(k) * (u64::from(k) + 1) / 2;
    let excess = (2 * u64::from(s)).saturating_sub(half) as u32;
    let n = BigUint::from(n);
    let denominator = n.pow(s) + n.pow(excess);
    libm::exp(ln_big(j) - ln_big(&denominator))
}

pub fn mean_value_scan(ns: &[u64], s: u32, k: u32) -> MeanValueScan {
    mean_value_scan_with(ns, s, k, Strategy::Auto, &Budget::default())
}

pub fn mean_value_scan_with(
    ns: &[u64],
    s: u32,
    k: u32,
    strategy: Strategy,
    budget: &Budget,
) -> MeanValueScan {
    let rows: Vec<ScanRow> = ns
        .iter()
        .map(|&n| ScanRow {
            n,
            outcome: vinogradov_count_with(n, s, k, strategy, budget).map(|r| {
                let rho = normalized_mean_value(&r.j, n, s, k);
                (r, rho)
            }),
        })
        .collect();
    let mut xs = Vec::new();
    let mut log_j = Vec::new();
    let mut log_rho = Vec::new();
    for row in &rows {
        if let Ok((r, rho)) = &row.outcome {
            xs.push(libm::log(row.n as f64));
            log_j.push(ln_big(&r.j));
            log_rho.push(libm::log(*rho));
        }
    }
    MeanValueScan {
        s,
        k,
        slope_log_j: crate::least_squares_slope(&xs, &log_j),
        slope_log_rho: crate::least_squares_slope(&xs, &log_rho),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Strategy;

    fn j(n: u64, s: u32, k: u32) -> BigUint {
        vinogradov_count(n, s, k).unwrap().j
    }

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    /// `Σ over multisets of (number of orderings)²`.
    fn multiset_oracle(n: u64, s: u32) -> BigUint {
        fn rec(n: u64, from: u64, left: u32, mults: &mut Vec<u32>, s: u32, acc: &mut BigUint) {
            if left == 0 {
                let mut orderings: BigUint = (1..=u64::from(s)).map(BigUint::from).product();
                for &m in mults.iter() {
                    let f: BigUint = (1..=u64::from(m)).map(BigUint::from).product();
                    orderings /= f;
                }
                *acc += &orderings * &orderings;
                return;
            }
            for x in from..=n {
                for m in 1..=left {
                    mults.push(m);
                    rec(n, x + 1, left - m, mults, s, acc);
                    mults.pop();
                }
            }
        }
        let mut acc = BigUint::zero();
        rec(n, 1, s, &mut Vec::new(), s, &mut acc);
        acc
    }

    #[test]
    fn power_sums() {
        assert_eq!(power_sum_vector(&[1, 1], 2, 2).unwrap(), vec![2, 2]);
        assert_eq!(power_sum_vector(&[1, 2], 2, 2).unwrap(), vec![3, 5]);
        assert_eq!(power_sum_vector(&[2, 3, 4], 4, 3).unwrap(), vec![9, 29, 99]);
        assert!(power_sum_vector(&[0, 1], 2, 2).is_err());
        assert!(power_sum_vector(&[3], 2, 2).is_err());
    }

    #[test]
    fn small_histograms() {
        let h = build_histogram(2, 1, 2).unwrap();
        assert_eq!(h.len(), 2);
        assert_eq!(h.get(&[1, 1]), Some(&big(1)));
        assert_eq!(h.get(&[2, 4]), Some(&big(1)));

        let h = build_histogram(2, 2, 2).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h.get(&[2, 2]), Some(&big(1)));
        assert_eq!(h.get(&[3, 5]), Some(&big(2)));
        assert_eq!(h.get(&[4, 8]), Some(&big(1)));
    }

    #[test]
    fn known_values() {
        assert_eq!(j(2, 2, 2), big(6));
        assert_eq!(j(2, 3, 2), big(20));
        assert_eq!(j(2, 2, 1), big(6));
        for n in [1, 2, 7, 30] {
            for k in 1..=5 {
                assert_eq!(j(n, 1, k), big(n));
            }
        }
        assert_eq!(brute_force_count(2, 2, 2).unwrap(), big(6));
        assert_eq!(brute_force_count(1, 3, 4).unwrap(), big(1));
        assert_eq!(brute_force_count(3, 2, 2).unwrap(), j(3, 2, 2));
    }

    #[test]
    fn engines_agree() {
        let budget = Budget::default();
        for k in 1..=4 {
            for s in 1..=4 {
                for n in [1, 2, 3, 5] {
                    let fold = vinogradov_count_with(n, s, k, Strategy::Fold, &budget).unwrap();
                    let mitm =
                        vinogradov_count_with(n, s, k, Strategy::MeetInTheMiddle, &budget).unwrap();
                    assert_eq!(fold.j, mitm.j, "n={n} s={s} k={k}");
                    assert_eq!(fold.distinct_vectors, mitm.distinct_vectors);
                    let h = build_histogram(n, s, k).unwrap();
                    assert_eq!(h.energy(), fold.j);
                    assert_eq!(h.len() as u64, fold.distinct_vectors);
                }
            }
        }
    }

    #[test]
    fn vector_keys_match_packed_keys() {
        let weights = vec![1u64; 6];
        let bounds = coordinate_bounds(6, 3, 3).unwrap();
        let packed = WordCodec::new(&bounds).unwrap();
        let (a, da) = fold_energy(&packed, 3, 3, &weights);
        let (b, db) = fold_energy(&VecCodec, 3, 3, &weights);
        let (c, dc) = mitm_energy(&VecCodec, 3, 3, &weights);
        let (a, b, c) = (u64::energy_to_big(a), u64::energy_to_big(b), u64::energy_to_big(c));
        assert_eq!(a, b);
        assert_eq!(b, c);
        assert_eq!((da, db), (db, dc));
    }

    #[test]
    fn big_counts_match_word_counts() {
        let budget = Budget::default();
        let w_small = vec![1u64; 5];
        let w_big = vec![BigUint::one(); 5];
        let (a, ..) = weighted_energy(2, 3, &w_small, Strategy::Auto, &budget).unwrap();
        let (b, ..) = weighted_energy(2, 3, &w_big, Strategy::Auto, &budget).unwrap();
        assert_eq!(u64::energy_to_big(a), b);
    }

    #[test]
    fn wide_sum_spills() {
        let mut e = WideSum::default();
        e.add(u128::MAX);
        e.add(5);
        assert_eq!(u64::energy_to_big(e), BigUint::from(u128::MAX) + 5u32);
    }

    #[test]
    fn key_bounds_and_mass() {
        for (n, s, k) in [(3u64, 3u32, 2u32), (4, 2, 3), (5, 4, 1)] {
            for step in 1..=s {
                let h = build_histogram(n, step, k).unwrap();
                assert_eq!(h.mass(), big(n).pow(step));
                for (v, r) in h.table() {
                    assert!(!r.is_zero());
                    for (j, &c) in v.iter().enumerate() {
                        let hi = u64::from(step) * n.pow(j as u32 + 1);
                        assert!(c >= u64::from(step) && c <= hi);
                    }
                }
            }
        }
    }

    #[test]
    fn degree_stabilization() {
        for (n, s) in [(3u64, 2u32), (4, 3), (3, 4)] {
            let oracle = multiset_oracle(n, s);
            let mut previous: Option<BigUint> = None;
            for k in 1..=s + 2 {
                let value = j(n, s, k);
                if let Some(p) = &previous {
                    assert!(value <= *p);
                }
                if k >= s {
                    assert_eq!(value, oracle, "n={n} s={s} k={k}");
                }
                previous = Some(value);
            }
        }
    }

    #[test]
    fn budget_errors() {
        let tight = Budget {
            support: 10,
            ..Budget::default()
        };
        let err = vinogradov_count_with(50, 4, 3, Strategy::Auto, &tight).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
        assert!(matches!(
            brute_force_count(40, 3, 2).unwrap_err(),
            Error::Budget { .. }
        ));
        assert!(matches!(
            brute_force_count_with(1000, 40, 2, 10).unwrap_err(),
            Error::Budget { .. }
        ));
        assert!(vinogradov_count(0, 1, 1).is_err());
        assert!(vinogradov_count(1u64 << 40, 2, 2).is_err());
    }

    #[test]
    fn support_estimates_bound_reality() {
        for (n, s, k) in [(5u64, 3u32, 2u32), (6, 2, 3), (4, 4, 1), (7, 3, 3)] {
            let h = build_histogram(n, s, k).unwrap();
            assert!(h.len() as u128 <= support_estimate(n, s, k));
        }
        assert_eq!(support_estimate(10, 0, 3), 1);
        assert_eq!(support_estimate(5, 2, 1), 9);
    }

    #[test]
    fn scans() {
        let scan = mean_value_scan(&[2, 5, 9, 17], 1, 2);
        for row in &scan.rows {
            let (_, rho) = row.outcome.as_ref().unwrap();
            assert!(*rho > 0.0 && *rho <= 1.0);
        }
        assert!((scan.slope_log_j.unwrap() - 1.0).abs() < 1e-12);

        let critical = mean_value_scan(&[4, 6, 8], 6, 3);
        for row in &critical.rows {
            assert!(row.outcome.as_ref().unwrap().1 >= 1.0);
        }

        let tight = Budget {
            support: 100,
            ..Budget::default()
        };
        let partial = mean_value_scan_with(&[3, 400], 2, 2, Strategy::Auto, &tight);
        assert!(partial.rows[0].outcome.is_ok());
        assert!(partial.rows[1].outcome.is_err());
    }

    #[test]
    fn ln_of_large_integers() {
        let x = BigUint::one() << 3000u32;
        assert!((ln_big(&x) - 3000.0 * core::f64::consts::LN_2).abs() < 1e-9);
        assert!((ln_big(&big(1000)) - libm::log(1000.0)).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn diagonal_bound_and_monotonicity(n in 1u64..7, s in 1u32..4, k in 1u32..4) {
            let base = j(n, s, k);
            let ns = big(n).pow(s);
            prop_assert!(base >= ns);
            prop_assert!(base <= &ns * &ns);
            prop_assert!(j(n + 1, s, k) >= base);
            prop_assert!(j(n, s + 1, k) >= base);
        }

        #[test]
        fn oracle_equivalence(n in 1u64..5, s in 1u32..4, k in 1u32..5) {
            prop_assert_eq!(j(n, s, k), brute_force_count(n, s, k).unwrap());
        }
    }
}
