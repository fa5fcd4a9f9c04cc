//! Table, record and manifest writers. Numbers are written in shortest
//! round-trip form so that re-reading a file recovers every bit.

use serde::Serialize;
use serde_json::{Map, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Column-major numeric table.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut obj = Map::new();
        for (i, name) in self.columns.iter().enumerate() {
            let col: Vec<Value> = self.rows.iter().map(|r| json_number(r[i])).collect();
            obj.insert((*name).to_string(), Value::Array(col));
        }
        to_pretty(&Value::Object(obj))
    }
}

fn json_number(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes to JSON");
    s.push('\n');
    s
}

/// Collects written files in creation order.
#[derive(Debug)]
pub struct OutputDir {
    pub root: PathBuf,
    pub files: Vec<PathBuf>,
    pub plot: bool,
}

impl OutputDir {
    pub fn create(root: &Path, plot: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new(), plot })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(path.clone());
        Ok(path)
    }

    pub fn write_table(&mut self, stem: &str, table: &Table, format: Format) -> Result<PathBuf, CliError> {
        let name = format!("{stem}.{}", format.extension());
        let body = match format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        };
        let path = self.write(&name, &body)?;
        if self.plot && format == Format::Csv && table.columns.len() >= 2 {
            let script = plot_script(&name, table, stem);
            self.write(&format!("{stem}.gp"), &script)?;
        }
        Ok(path)
    }
}

/// Generic gnuplot script: first column against each of the others.
fn plot_script(data: &str, table: &Table, stem: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{stem}.png'");
    let _ = writeln!(s, "set xlabel '{}'", table.columns[0]);
    let series: Vec<String> = (2..=table.columns.len())
        .map(|c| format!("'{data}' using 1:{c} with linespoints"))
        .collect();
    let _ = writeln!(s, "plot {}", series.join(", \\\n     "));
    s
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub config_snapshot: String,
    pub seed: Option<u64>,
    pub output_dir: String,
    pub files: Vec<String>,
    pub wall_clock_s: f64,
}
