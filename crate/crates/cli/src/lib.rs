//! Command-line front end for `decoupling-core`: configuration layering,
//! sweeps over parameter lists, and tidy CSV/JSON/JSONL tables that carry
//! their generating config.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches};

pub use artifact::{read_config, Artifact};
pub use config::{Command, Format, Layer, RunConfig, BUDGET_ENV};
pub use error::{CliError, ExitClass};

/// Global options shared by every command, as `(flag, config key, help)`.
const GLOBALS: [(&str, &str, &str); 6] = [
    ("seed", "seed", "Seed for random weights (default 0)"),
    ("out", "out", "Output file; the extension picks the format (default stdout)"),
    ("format", "format", "csv, json or jsonl"),
    ("support-budget", "support_budget", "Largest histogram support to build"),
    ("grid-budget", "grid_budget", "Largest quadrature grid, in nodes"),
    ("brute-force-budget", "brute_force_budget", "Largest brute-force tuple count"),
];

fn key_help(key: &str) -> &'static str {
    match key {
        "k" => "Degree of the moment curve; lists like 2,3 or 2..=8 sweep",
        "s" => "Number of summands; accepts a list",
        "N" => "Length N (a Whitney level for whitney); accepts a list such as 16,32,64",
        "strategy" => "auto, fold or mitm",
        "weights" => "unit, random (uses --seed) or a CSV file with columns n,re,im",
        "method" => "auto, quadrature or histogram",
        "I" => "First arc as level:index",
        "J" => "Second arc as level:index",
        "xi1" => "First curve parameter (default 0)",
        "xi2" => "Second curve parameter (default 1)",
        "records" => "squares (one row per square) or summary",
        "verify" => "Also check the cancellation and the exponent identities",
        _ => "",
    }
}

fn about(command: Command) -> &'static str {
    match command {
        Command::Count => "Exact Vinogradov mean values J_{s,k}(N) with fitted slopes",
        Command::Moment => "Even moments of the Weyl sum on the torus",
        Command::Ratio => "Empirical decoupling ratio at the critical exponent",
        Command::Growth => "Decoupling ratios over a list of N and the fitted growth slope",
        Command::Bilinear => "Bilinear ratio of two separated arcs and its ceiling",
        Command::Geometry => "Transversality wedge table against its exact constant",
        Command::Whitney => "Whitney squares of the unit square",
        Command::Exponents => "Exponent system M, c and its cancellation",
    }
}

pub fn cli() -> clap::Command {
    let mut root = clap::Command::new("decoupling")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Computations around l2 decoupling for the moment curve")
        .subcommand_required(true)
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_name("FILE")
                .help("key=value file read before the environment and flags"),
        );
    for (flag, _, help) in GLOBALS {
        let mut arg = Arg::new(flag).long(flag).global(true).help(help);
        if flag == "out" {
            arg = arg.visible_alias("emit").value_name("FILE");
        }
        root = root.arg(arg);
    }
    for command in Command::ALL {
        let mut sub = clap::Command::new(command.as_str()).about(about(command));
        for &key in command.keys() {
            let arg = Arg::new(key).long(key).help(key_help(key));
            sub = sub.arg(if key == "verify" {
                arg.action(ArgAction::SetTrue)
            } else {
                arg.value_name(key)
            });
        }
        root = root.subcommand(sub);
    }
    root
}

fn flags_layer(command: Command, root: &ArgMatches, sub: &ArgMatches) -> Result<Layer, CliError> {
    let mut layer = Layer::default();
    for (flag, key, _) in GLOBALS {
        if let Some(value) = root.get_one::<String>(flag).or_else(|| sub.get_one::<String>(flag)) {
            layer.set(key, value, command)?;
        }
    }
    for &key in command.keys() {
        if key == "verify" {
            if sub.get_flag(key) {
                layer.set(key, "true", command)?;
            }
        } else if let Some(value) = sub.get_one::<String>(key) {
            layer.set(key, value, command)?;
        }
    }
    Ok(layer)
}

/// Resolves the layered config from parsed arguments.
pub fn config_from_matches(matches: &ArgMatches, env_budget: Option<&str>) -> Result<RunConfig, CliError> {
    let (name, sub) = matches
        .subcommand()
        .ok_or_else(|| CliError::validation("missing command"))?;
    let command: Command = name.parse()?;
    let config_path = matches
        .get_one::<String>("config")
        .or_else(|| sub.get_one::<String>("config"))
        .map(PathBuf::from);
    let file = match config_path {
        Some(path) => {
            let text = fs::read_to_string(&path)
                .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
            Some(Layer::from_config_text(&text, command)?)
        }
        None => None,
    };
    RunConfig::assemble(command, file, env_budget, flags_layer(command, matches, sub)?)
}

/// Executes a config and writes its artifact to the configured path, or to
/// `stdout` when none is set.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<ExitClass, CliError> {
    let artifact = commands::run(config)?;
    match &config.output.path {
        Some(path) => artifact.write_to_path(path)?,
        None => artifact.write(stdout)?,
    }
    Ok(artifact.status)
}

/// Full entry point: parse, layer, run. Messages go to `stderr`.
pub fn main_with<I, T>(
    args: I,
    env_budget: Option<&str>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> ExitClass
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(err) => {
            let _ = write!(stderr, "{}", err.render());
            return if err.use_stderr() {
                ExitClass::Validation
            } else {
                ExitClass::Success
            };
        }
    };
    let outcome = config_from_matches(&matches, env_budget).and_then(|config| run(&config, stdout));
    match outcome {
        Ok(status) => {
            if status != ExitClass::Success {
                let _ = writeln!(stderr, "decoupling: finished with status {}", status.as_str());
            }
            status
        }
        Err(err) => {
            let _ = writeln!(stderr, "decoupling: {err}");
            err.class
        }
    }
}
