//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Every tolerance used below is pinned as a constant in this file.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use decoupling_core::counting::{
    brute_force_count, build_histogram, vinogradov_count, vinogradov_count_with, Strategy,
};
use decoupling_core::dyadic::DyadicInterval;
use decoupling_core::exponents::{build_system, holder_theta, verify_cancellation};
use decoupling_core::geometry::{transversality_value, verify_cap_rescaling};
use decoupling_core::torus::{
    bilinear_ceiling, bilinear_ratio, decoupling_ratio, exact_moment, growth_exponent, moment,
    Method, WeightMode, WeightSequence,
};
use decoupling_core::whitney::{
    interiors_disjoint, multiplicity_report, total_area, whitney_cover, whitney_diagonal,
    whitney_offdiagonal,
};
use decoupling_core::Budget;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

const ORACLE_TUPLE_LIMIT: u64 = 1_000_000;
const BRIDGE_REL_TOL: f64 = 1e-9;
const GROWTH_SLOPE_K2: f64 = 0.12;
const GROWTH_SLOPE_K3: f64 = 0.25;
const TRANSVERSALITY_REL_TOL: f64 = 1e-9;
const TRANSVERSALITY_PAIRS: usize = 50;
const RESCALING_TOL: f64 = 1e-10;
const RESCALING_INSTANCES: usize = 100;
const BILINEAR_SEEDS: u64 = 20;
const PARSEVAL_REL_TOL: f64 = 1e-12;
const PARSEVAL_GRID_NODES: u64 = 5_000_000;
const MODULATION_REL_TOL: f64 = 1e-9;
const SEED: u64 = 0x5eed_2024;

type Outcome = Result<String, String>;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Outcome {
    let mut cells = 0;
    for k in 1..=4u32 {
        for s in 1..=4u32 {
            let mut n = 1u64;
            while n.pow(2 * s) <= ORACLE_TUPLE_LIMIT {
                let fast = vinogradov_count(n, s, k).map_err(|e| e.to_string())?.j;
                let slow = brute_force_count(n, s, k).map_err(|e| e.to_string())?;
                ensure(fast == slow, || format!("J({n},{s},{k}): {fast} vs brute force {slow}"))?;
                cells += 1;
                n += 1;
            }
        }
    }
    Ok(format!("{cells} cells with N^(2s) <= {ORACLE_TUPLE_LIMIT}"))
}

fn known_values() -> Outcome {
    for n in 1..=100u64 {
        for k in 1..=5u32 {
            let j = vinogradov_count(n, 1, k).map_err(|e| e.to_string())?.j;
            ensure(j == BigUint::from(n), || format!("J({n},1,{k}) = {j}"))?;
        }
    }
    for (n, s, k, expected) in [(2u64, 2u32, 2u32, 6u64), (2, 3, 2, 20)] {
        let j = vinogradov_count(n, s, k).map_err(|e| e.to_string())?.j;
        let brute = brute_force_count(n, s, k).map_err(|e| e.to_string())?;
        ensure(j == BigUint::from(expected) && brute == j, || {
            format!("J({n},{s},{k}) = {j}, enumeration {brute}, expected {expected}")
        })?;
    }
    Ok("J(N,1,k)=N for N<=100, k<=5; J(2,2,2)=6; J(2,3,2)=20".into())
}

fn counting_bridge() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in [2usize, 4, 8] {
        let w = WeightSequence::unit(n).map_err(|e| e.to_string())?;
        let integral = exact_moment(2, 3, &w).map_err(|e| e.to_string())?;
        let j = vinogradov_count(n as u64, 3, 2).map_err(|e| e.to_string())?.j;
        let err = rel_err(integral, j.to_f64().unwrap());
        worst = worst.max(err);
        ensure(err < BRIDGE_REL_TOL, || format!("N={n}: {integral} vs {j}"))?;
    }
    Ok(format!("max relative error {worst:.2e} < {BRIDGE_REL_TOL:e}"))
}

fn growth_shadow() -> Outcome {
    let k2 = growth_exponent(2, &[16, 32, 64, 128, 256, 512], WeightMode::Unit)
        .map_err(|e| e.to_string())?;
    let k3_ns: Vec<u64> = (4..=24).collect();
    let k3 = growth_exponent(3, &k3_ns, WeightMode::Unit).map_err(|e| e.to_string())?;
    for report in [&k2, &k3] {
        for (n, row) in &report.rows {
            ensure(row.is_ok(), || format!("k={} N={n}: {:?}", report.k, row))?;
        }
    }
    let (s2, s3) = (k2.slope.unwrap_or(f64::NAN), k3.slope.unwrap_or(f64::NAN));
    ensure(s2 < GROWTH_SLOPE_K2, || format!("k=2 slope {s2}"))?;
    ensure(s3 < GROWTH_SLOPE_K3, || format!("k=3 slope {s3}"))?;
    Ok(format!(
        "k=2 slope {s2:.4} < {GROWTH_SLOPE_K2}; k=3 slope {s3:.4} < {GROWTH_SLOPE_K3}"
    ))
}

fn factorial(n: u32) -> u128 {
    (1..=u128::from(n)).product()
}

fn transversality() -> Outcome {
    let mut rng = SplitMix64::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for k in 2..=8u32 {
        for l in 1..k {
            let binom = factorial(k) / (factorial(l) * factorial(k - l));
            let constant = binom
                * (1..=l).map(factorial).product::<u128>()
                * (1..=k - l).map(factorial).product::<u128>();
            let at_unit = transversality_value(k, l, 0.0, 1.0).map_err(|e| e.to_string())?;
            let err = rel_err(at_unit, constant as f64);
            worst = worst.max(err);
            ensure(err < TRANSVERSALITY_REL_TOL, || {
                format!("k={k} l={l}: {at_unit} vs {constant}")
            })?;
            for _ in 0..TRANSVERSALITY_PAIRS {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                let value = transversality_value(k, l, a, b).map_err(|e| e.to_string())?;
                let expected = constant as f64 * (a - b).abs().powi((l * (k - l)) as i32);
                let err = rel_err(value, expected);
                worst = worst.max(err);
                ensure(err < TRANSVERSALITY_REL_TOL, || {
                    format!("k={k} l={l} xi=({a},{b}): {value} vs {expected}")
                })?;
            }
        }
    }
    ensure(transversality_value(2, 1, 0.0, 1.0).map_err(|e| e.to_string())? == 2.0, || "k=2,l=1".into())?;
    ensure(transversality_value(3, 1, 0.0, 1.0).map_err(|e| e.to_string())? == 6.0, || "k=3,l=1".into())?;
    Ok(format!(
        "k<=8, {TRANSVERSALITY_PAIRS} pairs per (k,l), max relative error {worst:.2e}"
    ))
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn exponent_cancellation() -> Outcome {
    for k in 2..=50u32 {
        let system = build_system(k).map_err(|e| e.to_string())?;
        let size = (k - 1) as usize;
        // Independent layout from the stated row pattern.
        let mut expected = vec![vec![BigRational::zero(); size]; size];
        let mut source = vec![BigRational::zero(); size];
        for l in 1..k as i64 {
            expected[(l - 1) as usize][(k as i64 - l - 1) as usize] += ratio(1, l);
            let lower = ratio(k as i64 - l, k as i64 - l + 1);
            if l == 1 {
                source[0] += lower;
            } else {
                expected[(l - 1) as usize][(l - 2) as usize] += lower;
            }
        }
        ensure(system.matrix == expected && system.source == source, || {
            format!("k={k}: system layout differs")
        })?;
        for col in 0..size {
            let sum: BigRational = expected.iter().map(|row| row[col].clone()).sum();
            ensure(sum.is_one(), || format!("k={k}: column {col} sums to {sum}"))?;
        }
        let mass: BigRational = source.iter().cloned().sum();
        let c = verify_cancellation(k).map_err(|e| e.to_string())?;
        let target = ratio(k as i64 - 1, k as i64);
        ensure(c.left_vector_ok && c.eta_coefficient == target && mass == target, || {
            format!("k={k}: cancellation {c:?}")
        })?;
        for l in 1..k {
            let h = holder_theta(k, l).map_err(|e| e.to_string())?;
            ensure(h.is_exact(), || format!("k={k} l={l}: residual {:?}", h.residual))?;
        }
    }
    Ok("k in [2,50]: 1^T M = 1^T, 1^T c = (k-1)/k, collinearity residual 0".into())
}

fn whitney_suite() -> Outcome {
    for n in 2..=12u32 {
        let cover = whitney_cover(n).map_err(|e| e.to_string())?;
        // Independent area: a square at scale m has area 4^(-m).
        let area: BigRational = cover
            .iter()
            .map(|sq| BigRational::new(BigInt::one(), BigInt::from(4u8).pow(sq.scale)))
            .sum();
        ensure(area.is_one() && total_area(&cover).is_one(), || format!("N={n}: area {area}"))?;
        ensure(interiors_disjoint(&cover), || format!("N={n}: overlapping interiors"))?;
        let report = multiplicity_report(n).map_err(|e| e.to_string())?;
        ensure(report.max_diagonal <= 6, || format!("N={n}: diagonal multiplicity {}", report.max_diagonal))?;
        for (level, m) in &report.max_offdiagonal {
            ensure(*m <= 8, || format!("N={n} level {level}: off-diagonal multiplicity {m}"))?;
        }
    }
    let sizes = (
        whitney_offdiagonal(2).map_err(|e| e.to_string())?.len(),
        whitney_diagonal(2).map_err(|e| e.to_string())?.len(),
        whitney_offdiagonal(3).map_err(|e| e.to_string())?.len(),
    );
    ensure(sizes == (6, 10, 18), || format!("sizes {sizes:?}"))?;
    Ok("N in [2,12]: area 1, disjoint, multiplicities <= 6 / <= 8; |W_2|=6, |W~_2|=10, |W_3|=18".into())
}

fn rescaling() -> Outcome {
    let mut rng = SplitMix64::seed_from_u64(SEED ^ 1);
    let mut worst: f64 = 0.0;
    for _ in 0..RESCALING_INSTANCES {
        let k = rng.random_range(1..=5u32);
        let outer_level = rng.random_range(0..=10u32);
        let outer = DyadicInterval::new(outer_level, rng.random_range(0..1u64 << outer_level))
            .map_err(|e| e.to_string())?;
        let depth = rng.random_range(0..=(20 - outer_level).min(10));
        let inner_index = (outer.index() << depth) + rng.random_range(0..1u64 << depth);
        let inner = DyadicInterval::new(outer_level + depth, inner_index).map_err(|e| e.to_string())?;
        let r = verify_cap_rescaling(&outer, &inner, k).map_err(|e| e.to_string())?;
        worst = worst.max(r);
        ensure(r < RESCALING_TOL, || format!("k={k} I={outer} J={inner}: residual {r}"))?;
    }
    Ok(format!("{RESCALING_INSTANCES} instances, max residual {worst:.2e} < {RESCALING_TOL:e}"))
}

fn bilinear_bridge() -> Outcome {
    let i = DyadicInterval::new(2, 0).map_err(|e| e.to_string())?;
    let j = DyadicInterval::new(2, 2).map_err(|e| e.to_string())?;
    let budget = Budget::default();
    let mut worst_margin = f64::INFINITY;
    for seed in 0..BILINEAR_SEEDS {
        let w = WeightSequence::random_unimodular(8, seed).map_err(|e| e.to_string())?;
        let b = bilinear_ratio(2, &i, &j, &w).map_err(|e| e.to_string())?;
        let ceiling = bilinear_ceiling(2, &i, &j, &w, &budget).map_err(|e| e.to_string())?;
        ensure(b.converged, || format!("seed {seed}: not converged ({:e})", b.estimate_error))?;
        ensure(b.value <= ceiling + b.estimate_error * b.value, || {
            format!("seed {seed}: B={} above ceiling {ceiling}", b.value)
        })?;
        worst_margin = worst_margin.min(ceiling / b.value);
    }
    Ok(format!(
        "{BILINEAR_SEEDS} seeds converged, min ceiling/B = {worst_margin:.3}"
    ))
}

fn invariant_suite() -> Outcome {
    let budget = Budget::default();
    // Parseval.
    let mut worst: f64 = 0.0;
    let mut quadrature_cells = 0;
    for k in 1..=4u32 {
        for n in 1..=32usize {
            let w = WeightSequence::random_unimodular(n, SEED + n as u64).map_err(|e| e.to_string())?;
            let nodes: u64 = (1..=k).map(|j| 2 * (n as u64).pow(j) + 1).product();
            let mut methods = vec![Method::Histogram];
            if nodes <= PARSEVAL_GRID_NODES {
                methods.push(Method::Quadrature);
            }
            for method in methods {
                let m = moment(k, 1, &w, method, &budget).map_err(|e| e.to_string())?;
                let err = rel_err(m.value, w.l2_norm_sq());
                worst = worst.max(err);
                ensure(err < PARSEVAL_REL_TOL, || {
                    format!("Parseval k={k} N={n} {}: {err:e}", method.as_str())
                })?;
                quadrature_cells += usize::from(method == Method::Quadrature);
            }
        }
    }
    // Mass conservation after every convolution step.
    for k in 1..=3u32 {
        for n in 1..=6u64 {
            for s in 1..=4u32 {
                let h = build_histogram(n, s, k).map_err(|e| e.to_string())?;
                ensure(h.mass() == BigUint::from(n).pow(s), || format!("mass N={n} s={s} k={k}"))?;
            }
        }
    }
    // Diagonal bound and monotonicity.
    let j = |n: u64, s: u32, k: u32| {
        vinogradov_count_with(n, s, k, Strategy::Auto, &budget).map(|r| r.j)
    };
    for k in 1..=4u32 {
        for n in 1..=8u64 {
            for s in 1..=4u32 {
                let base = j(n, s, k).map_err(|e| e.to_string())?;
                ensure(base >= BigUint::from(n).pow(s), || format!("J >= N^s at {n},{s},{k}"))?;
                ensure(j(n + 1, s, k).map_err(|e| e.to_string())? >= base, || format!("monotone in N at {n},{s},{k}"))?;
                ensure(j(n, s + 1, k).map_err(|e| e.to_string())? >= base, || format!("monotone in s at {n},{s},{k}"))?;
            }
        }
    }
    // Modulation invariance and D >= 1.
    let mut rng = SplitMix64::seed_from_u64(SEED ^ 2);
    for seed in 0..10u64 {
        for (k, n) in [(2u32, 6usize), (2, 12), (3, 3)] {
            let w = WeightSequence::random_unimodular(n, seed).map_err(|e| e.to_string())?;
            let theta: Vec<f64> = (0..k).map(|_| rng.random()).collect();
            let shifted = w.modulated(&theta);
            let s = k * (k + 1) / 2;
            for method in [Method::Quadrature, Method::Histogram] {
                let a = moment(k, s, &w, method, &budget).map_err(|e| e.to_string())?.value;
                let b = moment(k, s, &shifted, method, &budget).map_err(|e| e.to_string())?.value;
                ensure(rel_err(a, b) < MODULATION_REL_TOL, || {
                    format!("modulation k={k} N={n} {}: {a} vs {b}", method.as_str())
                })?;
            }
            let d = decoupling_ratio(k, &w).map_err(|e| e.to_string())?.value;
            let ds = decoupling_ratio(k, &shifted).map_err(|e| e.to_string())?.value;
            ensure(rel_err(d, ds) < MODULATION_REL_TOL && d >= 1.0, || format!("ratio k={k} N={n}: {d} {ds}"))?;
        }
    }
    Ok(format!(
        "Parseval max error {worst:.1e} ({quadrature_cells} cells also by grid); mass, J >= N^s, monotonicity, modulation invariance hold"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("known small values", known_values),
        ("counting-integral bridge", counting_bridge),
        ("growth shadow", growth_shadow),
        ("transversality constants", transversality),
        ("exponent cancellation", exponent_cancellation),
        ("whitney suite", whitney_suite),
        ("rescaling identity", rescaling),
        ("bilinear bridge", bilinear_bridge),
        ("invariant suite", invariant_suite),
    ];
    let mut failed = 0;
    for (index, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1}s)", index + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} ({secs:.1}s)", index + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
