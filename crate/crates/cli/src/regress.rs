//! Metric-versus-resolution regression over a metrics table.

use std::collections::BTreeMap;
use std::path::Path;

use log::warn;
use windbench_core::{loglinear_fit, LogBase, RegressionResult};

use crate::error::{CliError, Result};
use crate::tables::{NumericTable, RegressionRow};

/// Collapses exact duplicate rows; the same id with different values is an error.
fn dedupe(table: &NumericTable, what: &str) -> Result<BTreeMap<String, Vec<Option<f64>>>> {
    let mut out: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (id, values) in &table.rows {
        if let Some(prev) = out.get(id) {
            if prev != values {
                return Err(CliError::Config(format!("{what}: conflicting rows for id {id:?}")));
            }
            continue;
        }
        out.insert(id.clone(), values.clone());
    }
    Ok(out)
}

/// Resolution (grid point count) per dataset id from a `source_id,points` table.
pub fn points_by_id(points: &NumericTable) -> Result<BTreeMap<String, f64>> {
    let col = points.column("points").unwrap_or(0);
    dedupe(points, "points table")?
        .into_iter()
        .map(|(id, values)| match values.get(col).copied().flatten() {
            Some(p) if p > 0.0 => Ok((id, p)),
            _ => Err(CliError::Config(format!(
                "points table: id {id:?} has no positive point count"
            ))),
        })
        .collect()
}

/// Fits every metric column against log resolution, using each row that has
/// a value in that column.
pub fn regress_columns(
    metrics: &NumericTable,
    points: &BTreeMap<String, f64>,
    log_base: LogBase,
) -> Result<Vec<(String, windbench_core::Result<RegressionResult>)>> {
    let rows = dedupe(metrics, "metrics table")?;
    let missing: Vec<&str> = rows
        .keys()
        .filter(|id| !points.contains_key(*id))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Config(format!(
            "ids without a point count: {}",
            missing.join(", ")
        )));
    }
    let unused: Vec<&str> = points
        .keys()
        .filter(|id| !rows.contains_key(*id))
        .map(String::as_str)
        .collect();
    if !unused.is_empty() {
        warn!("point counts without metrics ignored: {}", unused.join(", "));
    }

    Ok(metrics
        .columns
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let (r, y): (Vec<f64>, Vec<f64>) = rows
                .iter()
                .filter_map(|(id, values)| values[c].map(|v| (points[id], v)))
                .unzip();
            (name.clone(), loglinear_fit(&r, &y, log_base))
        })
        .collect())
}

/// `regress`: every metric column must be fittable.
pub fn cmd_regress(metrics_csv: &Path, points_csv: &Path, log_base: LogBase) -> Result<Vec<RegressionRow>> {
    let metrics = NumericTable::read(metrics_csv)?;
    let points = points_by_id(&NumericTable::read(points_csv)?)?;
    regress_columns(&metrics, &points, log_base)?
        .into_iter()
        .map(|(name, fit)| match fit {
            Ok(fit) => Ok(RegressionRow::new(name, &fit)),
            Err(e) => Err(CliError::Config(format!("metric {name:?}: {e}"))),
        })
        .collect()
}
