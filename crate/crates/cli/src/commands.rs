//! One function per command, each turning a [`RunConfig`] into an [`Artifact`].

use std::path::Path;

use decoupling_core::counting::{self, Strategy};
use decoupling_core::dyadic::DyadicInterval;
use decoupling_core::torus::{self, Method, RatioReport, WeightMode, WeightSequence};
use decoupling_core::{exponents, geometry, whitney, Budget};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifact::Artifact;
use crate::config::{Command, RunConfig};
use crate::error::{CliError, ExitClass};

pub fn run(config: &RunConfig) -> Result<Artifact, CliError> {
    let budget = config.budget.to_budget();
    match config.command {
        Command::Count => count(config, &budget),
        Command::Moment => moment(config, &budget),
        Command::Ratio => ratio(config, &budget),
        Command::Growth => growth(config, &budget),
        Command::Bilinear => bilinear(config, &budget),
        Command::Geometry => geometry_table(config),
        Command::Whitney => whitney_table(config),
        Command::Exponents => exponent_table(config),
    }
}

/// Parses `"3"`, `"2,4,8"`, `"2..=5"` or `"2..5"`, and combinations such as `"1,4..=6"`.
pub fn parse_list(key: &str, text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || {
        CliError::validation(format!(
            "{key}: cannot read '{text}'; use a number, a list like 2,4,8 or a range like 2..=8"
        ))
    };
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..=") {
            out.extend(num(a)?..=num(b)?);
        } else if let Some((a, b)) = part.split_once("..") {
            out.extend(num(a)?..num(b)?);
        } else {
            out.push(num(part)?);
        }
    }
    if out.is_empty() {
        return Err(CliError::validation(format!("{key}: '{text}' is an empty list")));
    }
    Ok(out)
}

fn required<'a>(config: &'a RunConfig, key: &str) -> Result<&'a str, CliError> {
    config.param(key).ok_or_else(|| {
        CliError::validation(format!(
            "{} needs --{key} (or {key}=… in the config file)",
            config.command
        ))
    })
}

fn list(config: &RunConfig, key: &str, default: Option<&str>) -> Result<Vec<u64>, CliError> {
    match config.param(key).or(default) {
        Some(text) => parse_list(key, text),
        None => required(config, key).map(|_| Vec::new()),
    }
}

fn list_u32(config: &RunConfig, key: &str, default: Option<&str>) -> Result<Vec<u32>, CliError> {
    list(config, key, default)?
        .into_iter()
        .map(|v| u32::try_from(v).map_err(|_| CliError::validation(format!("{key}: {v} is too large"))))
        .collect()
}

fn single_u32(config: &RunConfig, key: &str) -> Result<u32, CliError> {
    match list_u32(config, key, None)?.as_slice() {
        [v] => Ok(*v),
        _ => Err(CliError::validation(format!("{key} takes a single value for {}", config.command))),
    }
}

fn real(config: &RunConfig, key: &str, default: f64) -> Result<f64, CliError> {
    match config.param(key) {
        None => Ok(default),
        Some(text) => text
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::validation(format!("{key} must be a finite number, got '{text}'"))),
    }
}

fn flag(config: &RunConfig, key: &str) -> Result<bool, CliError> {
    match config.param(key) {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(other) => Err(CliError::validation(format!("{key} must be true or false, got '{other}'"))),
    }
}

fn strategy(config: &RunConfig) -> Result<Strategy, CliError> {
    match config.param("strategy").unwrap_or("auto") {
        "auto" => Ok(Strategy::Auto),
        "fold" => Ok(Strategy::Fold),
        "mitm" | "meet-in-the-middle" => Ok(Strategy::MeetInTheMiddle),
        other => Err(CliError::validation(format!(
            "unknown strategy '{other}'; use auto, fold or mitm"
        ))),
    }
}

fn method(config: &RunConfig) -> Result<Method, CliError> {
    match config.param("method").unwrap_or("auto") {
        "auto" => Ok(Method::Auto),
        "quadrature" => Ok(Method::Quadrature),
        "histogram" => Ok(Method::Histogram),
        other => Err(CliError::validation(format!(
            "unknown method '{other}'; use auto, quadrature or histogram"
        ))),
    }
}

fn interval(key: &str, text: &str) -> Result<DyadicInterval, CliError> {
    let bad = || CliError::validation(format!("{key} must be level:index, e.g. 2:0, got '{text}'"));
    let (level, index) = text.split_once(':').ok_or_else(bad)?;
    let level = level.trim().parse().map_err(|_| bad())?;
    let index = index.trim().parse().map_err(|_| bad())?;
    Ok(DyadicInterval::new(level, index)?)
}

/// Where the coefficients `a_n` come from.
enum Weights {
    Generated(WeightMode),
    File(WeightSequence),
}

impl Weights {
    fn from_config(config: &RunConfig) -> Result<Weights, CliError> {
        match config.param("weights").unwrap_or("unit") {
            "unit" => Ok(Weights::Generated(WeightMode::Unit)),
            "random" => Ok(Weights::Generated(WeightMode::Random(config.seed))),
            path => read_weights(Path::new(path)).map(Weights::File),
        }
    }

    fn sizes(&self, config: &RunConfig) -> Result<Vec<u64>, CliError> {
        match (self, config.param("N")) {
            (Weights::File(w), None) => Ok(vec![w.n() as u64]),
            _ => list(config, "N", None),
        }
    }

    fn at(&self, n: u64) -> Result<WeightSequence, CliError> {
        match self {
            Weights::Generated(mode) => Ok(mode.weights(n as usize)?),
            Weights::File(w) if w.n() as u64 == n => Ok(w.clone()),
            Weights::File(w) => Err(CliError::validation(format!(
                "weights file has {} entries but N = {n}",
                w.n()
            ))),
        }
    }
}

/// CSV with header `n,re,im` and one row for each `n = 1..N`.
fn read_weights(path: &Path) -> Result<WeightSequence, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| {
        CliError::validation(format!(
            "weights must be unit, random or a CSV path; cannot read {}: {e}",
            path.display()
        ))
    })?;
    let mut entries: Vec<(u64, f64, f64)> = Vec::new();
    for record in reader.deserialize() {
        entries.push(record.map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?);
    }
    entries.sort_by_key(|e| e.0);
    if entries.iter().enumerate().any(|(i, e)| e.0 != i as u64 + 1) {
        return Err(CliError::validation(format!(
            "{}: column n must list 1..N exactly once",
            path.display()
        )));
    }
    let pairs: Vec<(f64, f64)> = entries.iter().map(|&(_, re, im)| (re, im)).collect();
    Ok(WeightSequence::from_pairs(&pairs)?)
}

fn status_cells(outcome: Result<(), &CliError>) -> Vec<(&'static str, Value)> {
    match outcome {
        Ok(()) => vec![("status", json!("ok"))],
        Err(e) => vec![("status", json!(e.class.as_str())), ("error", json!(e.message))],
    }
}

/// A sweep fails only when every cell did; the exit class is then the most
/// severe one among them.
fn sweep_status(failures: &[ExitClass], cells: usize) -> ExitClass {
    if cells > 0 && failures.len() == cells {
        failures.iter().copied().max().unwrap_or(ExitClass::Validation)
    } else {
        ExitClass::Success
    }
}

fn count(config: &RunConfig, budget: &Budget) -> Result<Artifact, CliError> {
    let ks = list_u32(config, "k", None)?;
    let ss = list_u32(config, "s", None)?;
    let ns = list(config, "N", None)?;
    let strategy = strategy(config)?;
    let groups: Vec<(u32, u32)> = ks.iter().flat_map(|&k| ss.iter().map(move |&s| (k, s))).collect();
    let scans: Vec<_> = groups
        .par_iter()
        .map(|&(k, s)| counting::mean_value_scan_with(&ns, s, k, strategy, budget))
        .collect();

    let mut out = Artifact::new(
        config.clone(),
        vec![
            "kind", "k", "s", "N", "J", "distinct_vectors", "rho", "strategy", "elapsed_ms",
            "slope_log_J", "slope_log_rho", "status", "error",
        ],
    );
    let mut failures = Vec::new();
    for scan in &scans {
        for row in &scan.rows {
            let mut cells = vec![
                ("kind", json!("cell")),
                ("k", json!(scan.k)),
                ("s", json!(scan.s)),
                ("N", json!(row.n)),
            ];
            match &row.outcome {
                Ok((r, rho)) => {
                    cells.extend([
                        ("J", json!(r.j.to_string())),
                        ("distinct_vectors", json!(r.distinct_vectors)),
                        ("rho", json!(rho)),
                        ("strategy", json!(r.strategy.as_str())),
                        ("elapsed_ms", json!(r.elapsed_ms)),
                    ]);
                    cells.extend(status_cells(Ok(())));
                }
                Err(e) => {
                    let e = CliError::from(e.clone());
                    failures.push(e.class);
                    cells.extend(status_cells(Err(&e)));
                }
            }
            out.push(cells);
        }
        if ns.len() >= 2 {
            out.push(vec![
                ("kind", json!("fit")),
                ("k", json!(scan.k)),
                ("s", json!(scan.s)),
                ("slope_log_J", json!(scan.slope_log_j)),
                ("slope_log_rho", json!(scan.slope_log_rho)),
                ("status", json!(if scan.slope_log_j.is_some() { "ok" } else { "too-few-points" })),
            ]);
        }
    }
    out.status = sweep_status(&failures, scans.len() * ns.len());
    Ok(out)
}

fn moment(config: &RunConfig, budget: &Budget) -> Result<Artifact, CliError> {
    let k = single_u32(config, "k")?;
    let ss = list_u32(config, "s", None)?;
    let weights = Weights::from_config(config)?;
    let ns = weights.sizes(config)?;
    let method = method(config)?;
    let mut out = Artifact::new(
        config.clone(),
        vec!["k", "s", "N", "value", "method", "grid", "status", "error"],
    );
    let mut failures = Vec::new();
    for &n in &ns {
        for &s in &ss {
            let mut cells = vec![("k", json!(k)), ("s", json!(s)), ("N", json!(n))];
            let result = weights
                .at(n)
                .and_then(|w| Ok(torus::moment(k, s, &w, method, budget)?));
            match result {
                Ok(m) => {
                    cells.extend([
                        ("value", json!(m.value)),
                        ("method", json!(m.method.as_str())),
                        ("grid", json!(m.grid)),
                    ]);
                    cells.extend(status_cells(Ok(())));
                }
                Err(e) => {
                    failures.push(e.class);
                    cells.extend(status_cells(Err(&e)));
                }
            }
            out.push(cells);
        }
    }
    out.status = sweep_status(&failures, ns.len() * ss.len());
    Ok(out)
}

const RATIO_COLUMNS: [&str; 11] = [
    "kind", "k", "N", "p", "value", "method", "grid", "seed", "slope", "status", "error",
];

fn ratio_cells(report: &RatioReport) -> Vec<(&'static str, Value)> {
    vec![
        ("p", json!(report.p)),
        ("value", json!(report.value)),
        ("method", json!(report.method.as_str())),
        ("grid", json!(report.grid)),
        ("seed", json!(report.seed)),
    ]
}

fn ratio(config: &RunConfig, budget: &Budget) -> Result<Artifact, CliError> {
    let k = single_u32(config, "k")?;
    let weights = Weights::from_config(config)?;
    let ns = weights.sizes(config)?;
    let method = method(config)?;
    let mut out = Artifact::new(config.clone(), RATIO_COLUMNS.to_vec());
    let mut failures = Vec::new();
    for &n in &ns {
        let mut cells = vec![("kind", json!("cell")), ("k", json!(k)), ("N", json!(n))];
        match weights
            .at(n)
            .and_then(|w| Ok(torus::decoupling_ratio_with(k, &w, method, budget)?))
        {
            Ok(report) => {
                cells.extend(ratio_cells(&report));
                cells.extend(status_cells(Ok(())));
            }
            Err(e) => {
                failures.push(e.class);
                cells.extend(status_cells(Err(&e)));
            }
        }
        out.push(cells);
    }
    out.status = sweep_status(&failures, ns.len());
    Ok(out)
}

fn growth(config: &RunConfig, budget: &Budget) -> Result<Artifact, CliError> {
    let k = single_u32(config, "k")?;
    let ns = list(config, "N", None)?;
    let mode = match Weights::from_config(config)? {
        Weights::Generated(mode) => mode,
        Weights::File(_) => {
            return Err(CliError::validation(
                "growth needs weights for every N; use weights=unit or weights=random",
            ))
        }
    };
    let report = torus::growth_exponent_with(k, &ns, mode, budget)?;
    let mut out = Artifact::new(config.clone(), RATIO_COLUMNS.to_vec());
    let mut failures = Vec::new();
    for (n, row) in &report.rows {
        let mut cells = vec![("kind", json!("cell")), ("k", json!(k)), ("N", json!(n))];
        match row {
            Ok(r) => {
                cells.extend(ratio_cells(r));
                cells.extend(status_cells(Ok(())));
            }
            Err(e) => {
                let e = CliError::from(e.clone());
                failures.push(e.class);
                cells.extend(status_cells(Err(&e)));
            }
        }
        out.push(cells);
    }
    out.push(vec![
        ("kind", json!("fit")),
        ("k", json!(k)),
        ("slope", json!(report.slope)),
        ("status", json!(if report.slope.is_some() { "ok" } else { "too-few-points" })),
    ]);
    out.status = sweep_status(&failures, report.rows.len());
    Ok(out)
}

fn bilinear(config: &RunConfig, budget: &Budget) -> Result<Artifact, CliError> {
    let k = single_u32(config, "k")?;
    let i = interval("I", required(config, "I")?)?;
    let j = interval("J", required(config, "J")?)?;
    let weights = Weights::from_config(config)?;
    let ns = weights.sizes(config)?;
    let mut out = Artifact::new(
        config.clone(),
        vec![
            "k", "N", "I", "J", "p", "value", "ceiling", "grid", "converged", "estimate_error",
            "seed", "status", "error",
        ],
    );
    let mut failures = Vec::new();
    let mut stalled = false;
    for &n in &ns {
        let mut cells = vec![
            ("k", json!(k)),
            ("N", json!(n)),
            ("I", json!(format!("{}:{}", i.level(), i.index()))),
            ("J", json!(format!("{}:{}", j.level(), j.index()))),
        ];
        let result = weights.at(n).and_then(|w| {
            let report = torus::bilinear_ratio_with(k, &i, &j, &w, budget)?;
            let ceiling = torus::bilinear_ceiling(k, &i, &j, &w, budget)?;
            Ok((report, ceiling))
        });
        match result {
            Ok((r, ceiling)) => {
                stalled |= !r.converged;
                cells.extend([
                    ("p", json!(r.p)),
                    ("value", json!(r.value)),
                    ("ceiling", json!(ceiling)),
                    ("grid", json!(r.grid)),
                    ("converged", json!(r.converged)),
                    ("estimate_error", json!(r.estimate_error)),
                    ("seed", json!(r.seed)),
                ]);
                if r.converged {
                    cells.extend(status_cells(Ok(())));
                } else {
                    cells.push(("status", json!(ExitClass::NonConvergence.as_str())));
                }
            }
            Err(e) => {
                failures.push(e.class);
                cells.extend(status_cells(Err(&e)));
            }
        }
        out.push(cells);
    }
    out.status = match sweep_status(&failures, ns.len()) {
        ExitClass::Success if stalled => ExitClass::NonConvergence,
        other => other,
    };
    Ok(out)
}

fn geometry_table(config: &RunConfig) -> Result<Artifact, CliError> {
    let ks = list_u32(config, "k", Some("2..=8"))?;
    let xi1 = real(config, "xi1", 0.0)?;
    let xi2 = real(config, "xi2", 1.0)?;
    let pairs: Vec<(u32, u32)> = ks.iter().flat_map(|&k| (1..k).map(move |l| (k, l))).collect();
    if pairs.is_empty() {
        return Err(CliError::validation("geometry needs some k ≥ 2"));
    }
    let rows: Vec<_> = pairs
        .par_iter()
        .map(|&(k, l)| -> Result<_, CliError> {
            let value = geometry::transversality_value(k, l, xi1, xi2)?;
            let constant = geometry::transversality_constant(k, l)?;
            Ok((k, l, value, constant))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Artifact::new(
        config.clone(),
        vec![
            "k", "l", "xi1", "xi2", "value", "constant", "expected", "rel_error", "integer", "match",
        ],
    );
    let distance = (xi1 - xi2).abs();
    for (k, l, value, constant) in rows {
        let expected = constant * distance.powi((l * (k - l)) as i32);
        let rel_error = if expected == 0.0 {
            value.abs()
        } else {
            (value - expected).abs() / expected.abs()
        };
        let integer = (distance == 1.0).then(|| value.round() as u64);
        out.push(vec![
            ("k", json!(k)),
            ("l", json!(l)),
            ("xi1", json!(xi1)),
            ("xi2", json!(xi2)),
            ("value", json!(value)),
            ("constant", json!(constant as u64)),
            ("expected", json!(expected)),
            ("rel_error", json!(rel_error)),
            ("integer", json!(integer)),
            ("match", json!(rel_error <= 1e-9)),
        ]);
    }
    Ok(out)
}

fn whitney_table(config: &RunConfig) -> Result<Artifact, CliError> {
    let levels = list_u32(config, "N", None)?;
    match config.param("records").unwrap_or("squares") {
        "squares" => {
            let mut out = Artifact::new(
                config.clone(),
                vec!["N", "scale", "level", "i", "j", "class", "area"],
            );
            for n in levels {
                for sq in whitney::whitney_cover(n)? {
                    let (i, j) = sq.indices();
                    out.push(vec![
                        ("N", json!(n)),
                        ("scale", json!(sq.scale)),
                        ("level", json!(sq.first.level())),
                        ("i", json!(i)),
                        ("j", json!(j)),
                        ("class", json!(sq.class.as_str())),
                        ("area", json!(sq.area().to_string())),
                    ]);
                }
            }
            Ok(out)
        }
        "summary" => {
            let mut out = Artifact::new(
                config.clone(),
                vec![
                    "N", "squares", "offdiagonal", "diagonal", "area", "exact_cover",
                    "max_diagonal_multiplicity", "max_offdiagonal_multiplicity",
                ],
            );
            for n in levels {
                let cover = whitney::whitney_cover(n)?;
                let report = whitney::multiplicity_report(n)?;
                let area = whitney::total_area(&cover);
                let diagonal = cover
                    .iter()
                    .filter(|sq| sq.class == whitney::SquareClass::Diagonal)
                    .count();
                let exact = area.to_string() == "1" && whitney::interiors_disjoint(&cover);
                out.push(vec![
                    ("N", json!(n)),
                    ("squares", json!(cover.len())),
                    ("offdiagonal", json!(cover.len() - diagonal)),
                    ("diagonal", json!(diagonal)),
                    ("area", json!(area.to_string())),
                    ("exact_cover", json!(exact)),
                    ("max_diagonal_multiplicity", json!(report.max_diagonal)),
                    (
                        "max_offdiagonal_multiplicity",
                        json!(report.max_offdiagonal.iter().map(|m| m.1).max()),
                    ),
                ]);
            }
            Ok(out)
        }
        other => Err(CliError::validation(format!(
            "unknown records '{other}'; use squares or summary"
        ))),
    }
}

fn fractions<T: ToString>(v: &[T]) -> Value {
    v.iter().map(|x| json!(x.to_string())).collect()
}

fn exponent_table(config: &RunConfig) -> Result<Artifact, CliError> {
    let ks = list_u32(config, "k", None)?;
    let verify = flag(config, "verify")?;
    let mut out = Artifact::new(
        config.clone(),
        vec![
            "k", "p", "M", "c", "left_vector_ok", "eta_coefficient", "forces_eta_nonpositive",
            "implied_eta", "theta", "holder_ok", "sigma", "b_max",
        ],
    );
    let rows: Vec<_> = ks
        .par_iter()
        .map(|&k| -> Result<_, CliError> {
            let system = exponents::build_system(k)?;
            let mut cells = vec![
                ("k", json!(k)),
                ("p", json!(exponents::critical_exponent(k)?)),
                ("M", system.matrix.iter().map(|row| fractions(row)).collect()),
                ("c", fractions(&system.source)),
            ];
            if verify {
                let cancel = exponents::verify_cancellation(k)?;
                let splits = (1..k).map(|l| exponents::holder_theta(k, l)).collect::<Result<Vec<_>, _>>()?;
                let thetas: Vec<_> = splits.iter().map(|h| h.theta.clone()).collect();
                let sigma = (1..k).map(|l| exponents::finiteness_slope(k, l)).collect::<Result<Vec<_>, _>>()?;
                let b_max = (1..k).map(|l| exponents::validity_range(k, l)).collect::<Result<Vec<_>, _>>()?;
                cells.extend([
                    ("left_vector_ok", json!(cancel.left_vector_ok)),
                    ("eta_coefficient", json!(cancel.eta_coefficient.to_string())),
                    ("forces_eta_nonpositive", json!(cancel.forces_eta_nonpositive)),
                    ("implied_eta", json!(exponents::implied_eta(k)?.map(|e| e.to_string()))),
                    ("theta", fractions(&thetas)),
                    ("holder_ok", json!(splits.iter().all(|h| h.is_exact()))),
                    ("sigma", fractions(&sigma)),
                    ("b_max", fractions(&b_max)),
                ]);
            }
            Ok(cells)
        })
        .collect::<Result<_, _>>()?;
    for cells in rows {
        out.push(cells);
    }
    Ok(out)
}
