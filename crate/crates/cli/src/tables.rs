//! CSV/JSON report tables.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so the
//! same value always produces the same bytes and parses back exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};
use windbench_core::RegressionResult;

use crate::error::{CliError, Result};

pub const METRICS_CSV: &str = "metrics.csv";
pub const METRICS_JSON: &str = "metrics.json";
pub const POINTS_CSV: &str = "points.csv";
pub const POWER_CSV: &str = "power.csv";
pub const POWER_JSON: &str = "power.json";
pub const REGRESSION_CSV: &str = "regression.csv";
pub const REGRESSION_JSON: &str = "regression.json";
pub const KDE_CSV: &str = "kde.csv";
pub const RUN_JSON: &str = "run.json";

pub fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Parses a table cell; empty, `-` and `NA` mean missing.
pub fn parse_cell(raw: &str) -> std::result::Result<Option<f64>, String> {
    let s = raw.trim();
    if s.is_empty() || s == "-" || s.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| format!("cannot parse {raw:?} as a number"))
}

/// One row of the distribution-metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub source_id: String,
    pub mean: f64,
    /// Mean of the top-k speeds ("max average").
    pub top_k_mean: f64,
    /// `None` for the reference itself.
    pub js: Option<f64>,
    pub w1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsRow {
    pub source_id: String,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub source_id: String,
    pub n_points: usize,
    pub n_steps: usize,
    pub total_energy_wh: f64,
    pub per_point_mean_power_w: f64,
    pub relative_power_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRow {
    pub metric: String,
    pub intercept: f64,
    pub slope: f64,
    pub std_dev: f64,
    pub r_squared_percent: f64,
    pub p_value: f64,
    pub n: usize,
}

impl RegressionRow {
    pub fn new(metric: impl Into<String>, fit: &RegressionResult) -> Self {
        RegressionRow {
            metric: metric.into(),
            intercept: fit.intercept,
            slope: fit.slope,
            std_dev: fit.slope_std_error,
            r_squared_percent: 100.0 * fit.r_squared,
            p_value: fit.p_value,
            n: fit.n,
        }
    }
}

fn write_records(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::csv(path, e))?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_metrics(dir: &Path, rows: &[MetricsRow]) -> Result<()> {
    write_records(
        &dir.join(METRICS_CSV),
        &["source_id", "mean", "top_k_mean", "js", "w1"],
        rows.iter().map(|r| {
            vec![
                r.source_id.clone(),
                fmt_num(r.mean),
                fmt_num(r.top_k_mean),
                fmt_opt(r.js),
                fmt_opt(r.w1),
            ]
        }),
    )?;
    write_json(&dir.join(METRICS_JSON), rows)
}

pub fn write_points(dir: &Path, rows: &[PointsRow]) -> Result<()> {
    write_records(
        &dir.join(POINTS_CSV),
        &["source_id", "points"],
        rows.iter().map(|r| vec![r.source_id.clone(), r.points.to_string()]),
    )
}

pub fn write_power(dir: &Path, rows: &[PowerRow]) -> Result<()> {
    write_records(
        &dir.join(POWER_CSV),
        &[
            "source_id",
            "n_points",
            "n_steps",
            "total_energy_wh",
            "per_point_mean_power_w",
            "relative_power_percent",
        ],
        rows.iter().map(|r| {
            vec![
                r.source_id.clone(),
                r.n_points.to_string(),
                r.n_steps.to_string(),
                fmt_num(r.total_energy_wh),
                fmt_num(r.per_point_mean_power_w),
                fmt_num(r.relative_power_percent),
            ]
        }),
    )?;
    write_json(&dir.join(POWER_JSON), rows)
}

pub fn write_regression_csv(path: &Path, rows: &[RegressionRow]) -> Result<()> {
    write_records(
        path,
        &[
            "metric",
            "intercept",
            "slope",
            "std_dev",
            "r_squared_percent",
            "p_value",
        ],
        rows.iter().map(|r| {
            vec![
                r.metric.clone(),
                fmt_num(r.intercept),
                fmt_num(r.slope),
                fmt_num(r.std_dev),
                fmt_num(r.r_squared_percent),
                fmt_num(r.p_value),
            ]
        }),
    )
}

/// Density curves sharing one speed grid, one column per dataset.
pub fn write_kde(dir: &Path, grid: &[f64], curves: &[(String, Vec<f64>)]) -> Result<()> {
    let mut header = vec!["speed_ms"];
    header.extend(curves.iter().map(|(id, _)| id.as_str()));
    write_records(
        &dir.join(KDE_CSV),
        &header,
        grid.iter().enumerate().map(|(k, &g)| {
            std::iter::once(fmt_num(g))
                .chain(curves.iter().map(|(_, d)| fmt_num(d[k])))
                .collect()
        }),
    )
}

/// A CSV keyed by its first column, all other columns numeric (or missing).
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub key: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

impl NumericTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| CliError::csv(path, e))?;
        let headers = reader.headers().map_err(|e| CliError::csv(path, e))?.clone();
        let mut names = headers.iter().map(str::to_string);
        let key = names
            .next()
            .ok_or_else(|| CliError::Config(format!("{}: empty header", path.display())))?;
        let columns: Vec<String> = names.collect();
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::csv(path, e))?;
            let id = record.get(0).unwrap_or_default().to_string();
            let values = record
                .iter()
                .skip(1)
                .map(parse_cell)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), line + 2)))?;
            if values.len() != columns.len() {
                return Err(CliError::Config(format!(
                    "{} row {}: expected {} values, found {}",
                    path.display(),
                    line + 2,
                    columns.len(),
                    values.len()
                )));
            }
            rows.push((id, values));
        }
        Ok(NumericTable { key, columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

/// Reads the raw string cells of one named column.
pub fn read_column_strings(path: &Path, name: &str) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::csv(path, e))?;
    let headers = reader.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let idx = headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Runtime(format!("{}: no column {name:?}", path.display())))?;
    reader
        .records()
        .map(|r| {
            r.map(|rec| rec.get(idx).unwrap_or_default().to_string())
                .map_err(|e| CliError::csv(path, e))
        })
        .collect()
}
