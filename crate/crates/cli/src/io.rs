//! CSV ingestion and result files.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{runtime, usage, CliResult};

/// Predictors and target read from a CSV file.
#[derive(Debug, Clone)]
pub struct Table {
    /// Predictor names in file order.
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
}

/// Reads a CSV with a header row; every column other than `target` is a predictor.
pub fn read_table(path: &Path, target: &str) -> CliResult<Table> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let target_col = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| usage(format!("{}: no target column named '{target}'", path.display())))?;
    let names: Vec<String> =
        headers.iter().enumerate().filter(|&(j, _)| j != target_col).map(|(_, h)| h.clone()).collect();

    let mut values = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let row = i + 1;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                usage(format!("{}: row {row}, column '{}': non-numeric value '{cell}'", path.display(), headers[j]))
            })?;
            if !v.is_finite() {
                return Err(usage(format!(
                    "{}: row {row}, column '{}': value is not finite",
                    path.display(),
                    headers[j]
                )));
            }
            if j == target_col {
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(usage(format!("{}: no data rows", path.display())));
    }
    let x = DMatrix::from_row_slice(y.len(), names.len(), &values);
    Ok(Table { names, x, y })
}

/// Writes a table with the given header.
pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let err = |e: csv::Error| runtime(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
}

/// Output directory of one run.
pub struct Output {
    dir: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a RunConfig,
    seed: u64,
    files: &'a [&'a str],
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: &'a RunConfig,
    seed: u64,
    #[serde(flatten)]
    body: &'a T,
}

impl Output {
    /// Creates the directory and writes `manifest.json` listing the result files.
    pub fn create(run: &RunConfig, files: &[&str]) -> CliResult<Self> {
        let dir = run.out_dir().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
        let out = Self { dir };
        out.write_json("manifest.json", &Manifest { config: run, seed: run.seed(), files })?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))
    }

    /// Writes a JSON object with the run configuration and seed alongside the body's fields.
    pub fn json(&self, name: &str, run: &RunConfig, body: &impl Serialize) -> CliResult<()> {
        self.write_json(name, &WithConfig { config: run, seed: run.seed(), body })
    }

    pub fn csv<I>(&self, name: &str, header: &[String], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        write_csv(&self.path(name), header, rows)
    }
}

pub fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}
