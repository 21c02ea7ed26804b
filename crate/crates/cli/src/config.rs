//! Run configuration: command, parameters, seed, output and budget.
//!
//! Sources are layered as defaults, then a `key=value` config file, then the
//! `DECOUPLING_BUDGET` environment variable, then command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use decoupling_core::Budget;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const BUDGET_ENV: &str = "DECOUPLING_BUDGET";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Count,
    Moment,
    Ratio,
    Growth,
    Bilinear,
    Geometry,
    Whitney,
    Exponents,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Count,
        Command::Moment,
        Command::Ratio,
        Command::Growth,
        Command::Bilinear,
        Command::Geometry,
        Command::Whitney,
        Command::Exponents,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Count => "count",
            Command::Moment => "moment",
            Command::Ratio => "ratio",
            Command::Growth => "growth",
            Command::Bilinear => "bilinear",
            Command::Geometry => "geometry",
            Command::Whitney => "whitney",
            Command::Exponents => "exponents",
        }
    }

    /// Parameter keys the command understands.
    pub fn keys(&self) -> &'static [&'static str] {
        match self {
            Command::Count => &["k", "s", "N", "strategy"],
            Command::Moment => &["k", "s", "N", "weights", "method"],
            Command::Ratio => &["k", "N", "weights", "method"],
            Command::Growth => &["k", "N", "weights"],
            Command::Bilinear => &["k", "N", "I", "J", "weights"],
            Command::Geometry => &["k", "xi1", "xi2"],
            Command::Whitney => &["N", "records"],
            Command::Exponents => &["k", "verify"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Command {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| CliError::validation(format!("unknown command '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Jsonl,
}

impl Format {
    pub fn from_extension(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            "jsonl" => Some(Format::Jsonl),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(CliError::validation(format!(
                "unknown format '{other}'; use csv, json or jsonl"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSpec {
    /// `None` writes to stdout.
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub support: u64,
    pub grid: u64,
    pub brute_force: u64,
}

impl Default for BudgetSpec {
    fn default() -> Self {
        let b = Budget::default();
        BudgetSpec {
            support: b.support,
            grid: b.grid,
            brute_force: b.brute_force,
        }
    }
}

impl BudgetSpec {
    pub fn to_budget(self) -> Budget {
        Budget {
            support: self.support,
            grid: self.grid,
            brute_force: self.brute_force,
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = parse_count(key, value)?;
        match key {
            "support" | "support_budget" => self.support = v,
            "grid" | "grid_budget" => self.grid = v,
            "brute_force" | "brute_force_budget" => self.brute_force = v,
            other => {
                return Err(CliError::validation(format!(
                    "unknown budget key '{other}'; use support, grid or brute_force"
                )))
            }
        }
        Ok(())
    }

    /// `support=…,grid=…,brute_force=…`; a bare number sets `support`.
    pub fn apply_env(&mut self, spec: &str) -> Result<(), CliError> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((key, value)) => self.set(key.trim(), value.trim())?,
                None => self.set("support", part)?,
            }
        }
        Ok(())
    }
}

/// Positive integer, accepting `1e6` and `_` separators.
fn parse_count(key: &str, value: &str) -> Result<u64, CliError> {
    let cleaned = value.replace('_', "");
    let parsed = cleaned.parse::<u64>().ok().or_else(|| {
        let f = cleaned.parse::<f64>().ok()?;
        (f.fract() == 0.0 && (1.0..1.8e19).contains(&f)).then_some(f as u64)
    });
    match parsed {
        Some(v) if v > 0 => Ok(v),
        _ => Err(CliError::validation(format!(
            "{key} must be a positive integer, got '{value}'"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: BTreeMap<String, String>,
    pub seed: u64,
    pub output: OutputSpec,
    pub budget: BudgetSpec,
}

/// Values collected from one source before layering.
#[derive(Clone, Debug, Default)]
pub struct Layer {
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub budget: Vec<(String, String)>,
}

impl Layer {
    /// Parses a `key=value` file; `#` starts a comment.
    pub fn from_config_text(text: &str, command: Command) -> Result<Layer, CliError> {
        let mut layer = Layer::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::validation(format!("config line {}: expected key=value", lineno + 1))
            })?;
            layer.set(key.trim(), value.trim(), command)?;
        }
        Ok(layer)
    }

    pub fn set(&mut self, key: &str, value: &str, command: Command) -> Result<(), CliError> {
        match key {
            "seed" => {
                self.seed = Some(value.parse().map_err(|_| {
                    CliError::validation(format!("seed must be a 64-bit integer, got '{value}'"))
                })?)
            }
            "out" | "emit" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = Some(value.parse()?),
            "support_budget" | "grid_budget" | "brute_force_budget" => {
                self.budget.push((key.to_string(), value.to_string()))
            }
            _ if command.keys().contains(&key) => {
                self.params.insert(key.to_string(), value.to_string());
            }
            _ => {
                return Err(CliError::validation(format!(
                    "'{key}' is not a parameter of {command}; expected one of {}",
                    command.keys().join(", ")
                )))
            }
        }
        Ok(())
    }
}

impl RunConfig {
    /// Layers `file`, then the environment budget, then `flags`.
    pub fn assemble(
        command: Command,
        file: Option<Layer>,
        env_budget: Option<&str>,
        flags: Layer,
    ) -> Result<RunConfig, CliError> {
        let mut params = BTreeMap::new();
        let mut seed = 0;
        let mut out = None;
        let mut format = None;
        let mut budget = BudgetSpec::default();
        let mut apply = |layer: Layer, budget: &mut BudgetSpec| -> Result<(), CliError> {
            params.extend(layer.params);
            seed = layer.seed.unwrap_or(seed);
            out = layer.out.or(out.take());
            format = layer.format.or(format);
            for (key, value) in layer.budget {
                budget.set(&key, &value)?;
            }
            Ok(())
        };
        if let Some(file) = file {
            apply(file, &mut budget)?;
        }
        if let Some(spec) = env_budget {
            budget.apply_env(spec)?;
        }
        apply(flags, &mut budget)?;
        let format = match (format, &out) {
            (Some(f), _) => f,
            (None, Some(path)) => Format::from_extension(path).unwrap_or(Format::Json),
            (None, None) => Format::Json,
        };
        Ok(RunConfig {
            command,
            params,
            seed,
            output: OutputSpec { path: out, format },
            budget,
        })
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    /// The config as `key=value` lines that [`Layer::from_config_text`] reads back.
    pub fn to_config_text(&self) -> String {
        let mut lines = vec![format!("seed={}", self.seed)];
        lines.extend(self.params.iter().map(|(k, v)| format!("{k}={v}")));
        if let Some(path) = &self.output.path {
            lines.push(format!("out={}", path.display()));
        }
        let format = serde_json::to_value(self.output.format).unwrap_or_default();
        lines.push(format!("format={}", format.as_str().unwrap_or("json")));
        lines.push(format!("support_budget={}", self.budget.support));
        lines.push(format!("grid_budget={}", self.budget.grid));
        lines.push(format!("brute_force_budget={}", self.budget.brute_force));
        lines.join("\n") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_order() {
        let file = Layer::from_config_text(
            "# sweep\nk=2\ns=3\nN=16,32\nseed=7\nsupport_budget=1000\n",
            Command::Count,
        )
        .unwrap();
        let mut flags = Layer::default();
        flags.set("N", "64", Command::Count).unwrap();
        let cfg = RunConfig::assemble(Command::Count, Some(file), Some("support=5e3,grid=9"), flags).unwrap();
        assert_eq!(cfg.param("N"), Some("64"));
        assert_eq!(cfg.param("k"), Some("2"));
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.budget.support, 5000);
        assert_eq!(cfg.budget.grid, 9);
        assert_eq!(cfg.output.format, Format::Json);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Layer::from_config_text("k", Command::Count).is_err());
        assert!(Layer::from_config_text("weights=unit", Command::Count).is_err());
        assert!(Layer::from_config_text("seed=-1", Command::Count).is_err());
        let mut b = BudgetSpec::default();
        assert!(b.apply_env("support=0").is_err());
        assert!(b.apply_env("memory=5").is_err());
        b.apply_env("123").unwrap();
        assert_eq!(b.support, 123);
    }

    #[test]
    fn text_round_trip() {
        let mut flags = Layer::default();
        flags.set("k", "4", Command::Exponents).unwrap();
        flags.set("verify", "true", Command::Exponents).unwrap();
        flags.set("out", "e.csv", Command::Exponents).unwrap();
        let cfg = RunConfig::assemble(Command::Exponents, None, None, flags).unwrap();
        assert_eq!(cfg.output.format, Format::Csv);
        let again = Layer::from_config_text(&cfg.to_config_text(), Command::Exponents).unwrap();
        let back = RunConfig::assemble(Command::Exponents, Some(again), None, Layer::default()).unwrap();
        assert_eq!(back, cfg);
    }
}
