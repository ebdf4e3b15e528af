//! Rendering of command results as a table, JSON or CSV.
//!
//! All three renderings come from the same JSON value, and every float is
//! printed by the JSON writer's shortest round-trip formatter, so JSON and
//! CSV carry identical digits.

use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::Scenario;
use crate::error::{CliError, Result};

pub const TOOL: &str = "doqkd";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

/// A command's result together with the provenance every output embeds.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Scenario,
    pub results: Value,
    /// Name of the array in `results` that CSV renders as rows; otherwise
    /// CSV lists flattened `key,value` pairs.
    #[serde(skip)]
    pub rows: Option<&'static str>,
}

impl Report {
    pub fn new(
        command: &'static str,
        config: Scenario,
        results: impl Serialize,
        rows: Option<&'static str>,
    ) -> Result<Self> {
        let results =
            serde_json::to_value(results).map_err(|e| CliError::Numerical(e.to_string()))?;
        Ok(Report {
            tool: TOOL,
            version: VERSION,
            command,
            config,
            results,
            rows,
        })
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                writeln!(out)?;
            }
            Format::Csv => self.write_csv(out)?,
            Format::Table => self.write_table(out)?,
        }
        Ok(())
    }

    fn config_json(&self) -> Result<String> {
        serde_json::to_string(&self.config).map_err(|e| CliError::Numerical(e.to_string()))
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# {} {} {}", self.tool, self.version, self.command)?;
        writeln!(out, "# config {}", self.config_json()?)?;
        for (k, v) in self.summary() {
            writeln!(out, "# {k} = {v}")?;
        }
        let (header, rows) = self.tabulate();
        writeln!(
            out,
            "{}",
            header
                .iter()
                .map(|h| csv_field(h))
                .collect::<Vec<_>>()
                .join(",")
        )?;
        for row in rows {
            writeln!(
                out,
                "{}",
                row.iter()
                    .map(|c| csv_field(c))
                    .collect::<Vec<_>>()
                    .join(",")
            )?;
        }
        Ok(())
    }

    fn write_table(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "{} {} {}", self.tool, self.version, self.command)?;
        writeln!(out, "config: {}", self.config_json()?)?;
        writeln!(out)?;
        let summary = self.summary();
        if !summary.is_empty() {
            let w = summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in &summary {
                writeln!(out, "{k:<w$}  {v}")?;
            }
            writeln!(out)?;
        }
        let (header, rows) = self.tabulate();
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in &rows {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        writeln!(out, "{}", line(&header))?;
        for row in &rows {
            writeln!(out, "{}", line(row))?;
        }
        Ok(())
    }

    /// Flattened results outside the row array, when there is one.
    pub fn summary(&self) -> Vec<(String, String)> {
        match (self.rows, &self.results) {
            (Some(key), Value::Object(map)) => {
                let mut rest = map.clone();
                rest.shift_remove(key);
                flatten_map(&rest, "")
            }
            _ => Vec::new(),
        }
    }

    /// Header and rows shared by the CSV and table renderings.
    pub fn tabulate(&self) -> (Vec<String>, Vec<Vec<String>>) {
        if let Some(Value::Array(items)) = self.rows.and_then(|k| self.results.get(k)) {
            let flat: Vec<Vec<(String, String)>> = items.iter().map(|v| flatten(v, "")).collect();
            let mut header: Vec<String> = Vec::new();
            for row in &flat {
                for (k, _) in row {
                    if !header.contains(k) {
                        header.push(k.clone());
                    }
                }
            }
            let rows = flat
                .iter()
                .map(|row| {
                    header
                        .iter()
                        .map(|h| {
                            row.iter()
                                .find(|(k, _)| k == h)
                                .map(|(_, v)| v.clone())
                                .unwrap_or_default()
                        })
                        .collect()
                })
                .collect();
            (header, rows)
        } else {
            let rows = flatten(&self.results, "")
                .into_iter()
                .map(|(k, v)| vec![k, v])
                .collect();
            (vec!["key".into(), "value".into()], rows)
        }
    }
}

/// Shortest round-trip text for a JSON number, exactly as the JSON writer
/// prints it.
pub fn format_number(n: &serde_json::Number) -> String {
    n.to_string()
}

/// [`format_number`] for a bare float; non-finite values print as `NaN`,
/// `inf` or `-inf`.
pub fn format_f64(x: f64) -> String {
    serde_json::Number::from_f64(x).map_or_else(|| x.to_string(), |n| format_number(&n))
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => format_number(n),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// `(dotted.path, text)` for every leaf; arrays index by position.
pub fn flatten(v: &Value, prefix: &str) -> Vec<(String, String)> {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => flatten_map(map, prefix),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .flat_map(|(i, x)| flatten(x, &join(&i.to_string())))
            .collect(),
        leaf => vec![(prefix.to_string(), scalar(leaf))],
    }
}

fn flatten_map(map: &Map<String, Value>, prefix: &str) -> Vec<(String, String)> {
    map.iter()
        .flat_map(|(k, x)| {
            let key = if prefix.is_empty() {
                k.clone()
            } else {
                format!("{prefix}.{k}")
            };
            flatten(x, &key)
        })
        .collect()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
