//! Tidy tables written as CSV, JSON or JSONL, each carrying the config that
//! produced it.
//!
//! * CSV: `# config: {json}` comment line, then header and rows.
//! * JSON: `{"config": …, "status": …, "rows": [{column: value}, …]}`.
//! * JSONL: first line `{"config": …}`, then one object per row.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, ExitClass};

const CONFIG_PREFIX: &str = "# config: ";

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub config: RunConfig,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub status: ExitClass,
}

impl Artifact {
    pub fn new(config: RunConfig, columns: Vec<&'static str>) -> Self {
        Artifact {
            config,
            columns,
            rows: Vec::new(),
            status: ExitClass::Success,
        }
    }

    /// Appends a row given as `(column, value)` pairs; missing columns are null.
    pub fn push(&mut self, cells: Vec<(&'static str, Value)>) {
        let mut row = vec![Value::Null; self.columns.len()];
        for (name, value) in cells {
            let index = self
                .columns
                .iter()
                .position(|c| *c == name)
                .unwrap_or_else(|| panic!("column {name} not declared"));
            row[index] = value;
        }
        self.rows.push(row);
    }

    fn row_object(&self, row: &[Value]) -> Map<String, Value> {
        self.columns
            .iter()
            .zip(row)
            .map(|(c, v)| (c.to_string(), v.clone()))
            .collect()
    }

    pub fn write(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let config = serde_json::to_value(&self.config).map_err(|e| CliError::io(e.to_string()))?;
        match self.config.output.format {
            Format::Csv => {
                writeln!(out, "{CONFIG_PREFIX}{config}")?;
                let mut writer = csv::Writer::from_writer(out);
                writer
                    .write_record(&self.columns)
                    .map_err(|e| CliError::io(e.to_string()))?;
                for row in &self.rows {
                    writer
                        .write_record(row.iter().map(csv_cell))
                        .map_err(|e| CliError::io(e.to_string()))?;
                }
                writer.flush()?;
            }
            Format::Json => {
                let rows: Vec<Value> = self.rows.iter().map(|r| Value::Object(self.row_object(r))).collect();
                let doc = json!({
                    "config": config,
                    "status": self.status.as_str(),
                    "rows": rows,
                });
                serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| CliError::io(e.to_string()))?;
                writeln!(out)?;
            }
            Format::Jsonl => {
                writeln!(out, "{}", json!({ "config": config }))?;
                for row in &self.rows {
                    writeln!(out, "{}", Value::Object(self.row_object(row)))?;
                }
            }
        }
        Ok(())
    }

    pub fn write_to_path(&self, path: &Path) -> Result<(), CliError> {
        let mut file = fs::File::create(path)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
        self.write(&mut file)
    }
}

fn csv_cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        other => other.to_string(),
    }
}

/// Recovers the generating config from an artifact file of any format.
pub fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::io(format!("cannot open {}: {e}", path.display())))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first)?;
    let parse = |text: &str| -> Result<Value, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
    };
    let config = if let Some(rest) = first.strip_prefix(CONFIG_PREFIX) {
        parse(rest.trim())?
    } else if first.trim_start().starts_with("{\"config\"") {
        parse(first.trim())?["config"].take()
    } else {
        parse(&fs::read_to_string(path)?)?["config"].take()
    };
    serde_json::from_value(config)
        .map_err(|e| CliError::validation(format!("{} has no readable config: {e}", path.display())))
}
