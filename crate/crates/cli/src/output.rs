//! Result tables and their CSV / JSON encodings.
//!
//! Floats are written in Rust's shortest round-trip notation, so a CSV
//! value parses back to the identical `f64`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::{emit_config, ExperimentSpec, OutputFormat};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Float(f64),
    Bool(bool),
    /// Not computed (for instance Monte-Carlo columns with `mc.enabled = false`).
    Missing,
}

impl Cell {
    fn csv_text(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => x.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            Cell::Float(x) => serde_json::Number::from_f64(*x).map_or(Value::Null, Value::Number),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Missing, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv_text))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> =
                    self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json())).collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let io = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    };
    CliError::io(path, io)
}

pub fn write_table(table: &Table, path: &Path, format: OutputFormat) -> CliResult<()> {
    let mut file = create(path)?;
    match format {
        OutputFormat::Csv => table.write_csv(&mut file).map_err(|e| csv_error(path, e))?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut file, &table.to_json()).map_err(|e| CliError::io(path, e.into()))?;
            writeln!(file).map_err(|e| CliError::io(path, e))?;
        }
    }
    file.flush().map_err(|e| CliError::io(path, e))
}

/// `<out>.meta.json` next to the result file.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Everything needed to rerun `spec` bit-identically.
pub fn metadata(spec: &ExperimentSpec) -> Value {
    json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": spec.kind.as_str(),
        "seed": spec.mc.seed,
        "trials": spec.mc.trials,
        "workers": spec.mc.workers,
        "mc_enabled": spec.mc_enabled,
        "method": spec.method,
        "format": spec.format.as_str(),
        "params": spec.params,
        "scenarios": spec.scenarios.iter().map(|s| s.label()).collect::<Vec<_>>(),
        "config": emit_config(spec),
    })
}

pub fn write_sidecar(spec: &ExperimentSpec, out: &Path) -> CliResult<PathBuf> {
    let path = sidecar_path(out);
    let mut file = create(&path)?;
    serde_json::to_writer_pretty(&mut file, &metadata(spec)).map_err(|e| CliError::io(&path, e.into()))?;
    writeln!(file).and_then(|_| file.flush()).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(vec!["name", "x", "n", "missing"]);
        t.push(vec![Cell::Text("S3".into()), Cell::Float(0.1 + 0.2), Cell::Int(7), Cell::Missing]);
        t.push(vec![
            Cell::Text("a,b".into()),
            Cell::Float(1.234_567_890_123_456_7e-12),
            Cell::Int(0),
            Cell::Float(1.0),
        ]);
        t
    }

    #[test]
    fn csv_floats_round_trip_exactly() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap(), vec!["name", "x", "n", "missing"]);
        let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(rows[1][0].to_string(), "a,b");
        assert_eq!(rows[1][1].parse::<f64>().unwrap(), 1.234_567_890_123_456_7e-12);
        assert_eq!(&rows[0][3], "");
    }

    #[test]
    fn json_rows_keep_column_order() {
        let v = sample().to_json();
        let first = v[0].as_object().unwrap();
        assert_eq!(first.keys().cloned().collect::<Vec<_>>(), vec!["name", "x", "n", "missing"]);
        assert!(first["missing"].is_null());
        assert_eq!(first["n"], json!(7));
    }

    #[test]
    fn sidecar_sits_next_to_output() {
        assert_eq!(sidecar_path(Path::new("out/run.csv")), PathBuf::from("out/run.csv.meta.json"));
    }
}
