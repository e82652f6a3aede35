//! The `evaluate` pipeline: load, prepare, compare, and write the run directory.
//!
//! Layout of a run directory:
//!
//! ```text
//! metrics.csv / metrics.json        mean, top-k mean, JS, W1 per dataset
//! power.csv / power.json            cumulative and relative power
//! points.csv                        regression resolution per dataset
//! regression.csv / regression.json  metric vs log(points) fits
//! kde.csv                           density curves on one shared grid
//! run.json                          status, errors and run metadata
//! datasets/<id>/summary.json        per-dataset preparation details
//! ```

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use windbench_core::grid::read_wgrd_all;
use windbench_core::{
    cumulative_power, extrapolate_height, js_distance, kde_eval, read_wgrd, relative_power_with, scott_bandwidth,
    select_region, top_k_mean, w1_distance, wind_speed, EmpiricalSample, GriddedSeries, PowerCurve, PowerSummary,
    RegionSelection, SpeedGrid,
};

use crate::config::{DatasetEntry, Role, RunConfig};
use crate::error::{CliError, Result};
use crate::regress::regress_columns;
use crate::tables::{self, MetricsRow, NumericTable, PointsRow, PowerRow, RegressionRow};
use crate::threads::thread_pool;

/// A dataset after wind-speed derivation, region selection and pooling.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub entry: DatasetEntry,
    pub sample: EmpiricalSample,
    pub bandwidth: f64,
    pub top_k_mean: f64,
    /// Grid points inside the region and mask.
    pub points: usize,
    pub power: PowerSummary,
}

impl Prepared {
    pub fn regression_points(&self) -> usize {
        self.entry.declared_points.unwrap_or(self.points)
    }
}

/// Candidate-versus-reference scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub js: f64,
    pub w1: f64,
    pub relative_power_percent: f64,
}

#[derive(Debug, Serialize)]
struct DatasetSummary<'a> {
    id: &'a str,
    role: Role,
    points: usize,
    regression_points: usize,
    samples: usize,
    dropped_nan: usize,
    bandwidth: f64,
    mean: f64,
    top_k_mean: f64,
    power: &'a PowerSummary,
}

#[derive(Debug, Serialize)]
struct DatasetStatus {
    id: String,
    role: Role,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SkippedRegression {
    metric: String,
    reason: String,
}

#[derive(Debug, Serialize)]
struct RunMeta<'a> {
    generated_at: String,
    tool_version: &'static str,
    log_base: &'static str,
    config: &'a RunConfig,
    datasets: Vec<DatasetStatus>,
    skipped_regressions: Vec<SkippedRegression>,
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub run_dir: PathBuf,
    /// `(dataset id, error)` for every dataset that could not be evaluated.
    pub failures: Vec<(String, String)>,
}

fn pick_variable(path: &Path, name: Option<&str>) -> Result<GriddedSeries> {
    let vars = read_wgrd_all(path)?;
    match name {
        None => vars
            .into_iter()
            .next()
            .ok_or_else(|| CliError::Runtime(format!("{}: file contains no variables", path.display()))),
        Some(name) => vars
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| CliError::Runtime(format!("{}: variable {name:?} not found", path.display()))),
    }
}

/// Loads `u`/`v`, derives hub-height speeds, selects the region and pools.
pub fn prepare_dataset(
    entry: &DatasetEntry,
    config: &RunConfig,
    curve: &PowerCurve,
    default_mask: Option<&GriddedSeries>,
) -> Result<Prepared> {
    let (start, end) = config.window_seconds();
    let u = pick_variable(&entry.u_path, entry.u_var.as_deref())?.select_times(start, end);
    let v = pick_variable(&entry.v_path, entry.v_var.as_deref())?.select_times(start, end);
    if u.n_times() == 0 {
        return Err(CliError::Runtime(format!(
            "no time steps inside [{}, {})",
            config.time_window.start, config.time_window.end
        )));
    }
    let speed = wind_speed(&u, &v)?;
    let hub = extrapolate_height(&speed, &config.wind_params(entry.ref_height_m))?;

    let mut region = config.region_bounds()?;
    let own_mask;
    let mask = match &entry.mask_path {
        Some(p) => {
            own_mask = read_wgrd(p)?;
            Some(&own_mask)
        }
        None => default_mask,
    };
    if let Some(m) = mask {
        region = region.with_mask(m.clone())?;
    }
    let selected = select_region(&hub, &region)?;
    let points = selected.active_point_count();
    let power = cumulative_power(&selected, curve, config.step_hours)?;

    let sample = EmpiricalSample::new(entry.id.clone(), selected.active_values())?;
    if sample.dropped_nan() > 0 {
        info!(
            "{}: dropped {} missing values before pooling",
            entry.id,
            sample.dropped_nan()
        );
    }
    let bandwidth = scott_bandwidth(&sample)?;
    let top_k_mean = top_k_mean(&sample, config.top_k)?;
    Ok(Prepared {
        entry: entry.clone(),
        sample,
        bandwidth,
        top_k_mean,
        points,
        power,
    })
}

/// Scores `candidate` against `reference`.
pub fn compare(reference: &Prepared, candidate: &Prepared, config: &RunConfig) -> Result<Comparison> {
    let grid = SpeedGrid::shared(
        &[&reference.sample, &candidate.sample],
        &[reference.bandwidth, candidate.bandwidth],
        config.kde_grid_size,
    )?;
    let p = kde_eval(&reference.sample, &grid, reference.bandwidth)?;
    let q = kde_eval(&candidate.sample, &grid, candidate.bandwidth)?;
    Ok(Comparison {
        js: js_distance(&p, &q)?,
        w1: w1_distance(&reference.sample, &candidate.sample)?,
        relative_power_percent: relative_power_with(&candidate.power, &reference.power, config.power_normalization)?,
    })
}

fn write_dataset_summary(dir: &Path, p: &Prepared) -> Result<()> {
    let sub = dir.join("datasets").join(&p.entry.id);
    std::fs::create_dir_all(&sub).map_err(|e| CliError::io(&sub, e))?;
    tables::write_json(
        &sub.join("summary.json"),
        &DatasetSummary {
            id: &p.entry.id,
            role: p.entry.role,
            points: p.points,
            regression_points: p.regression_points(),
            samples: p.sample.len(),
            dropped_nan: p.sample.dropped_nan(),
            bandwidth: p.bandwidth,
            mean: p.sample.mean(),
            top_k_mean: p.top_k_mean,
            power: &p.power,
        },
    )
}

fn write_error_summary(dir: &Path, entry: &DatasetEntry, error: &str) -> Result<()> {
    let sub = dir.join("datasets").join(&entry.id);
    std::fs::create_dir_all(&sub).map_err(|e| CliError::io(&sub, e))?;
    tables::write_json(
        &sub.join("error.json"),
        &serde_json::json!({ "id": entry.id, "error": error }),
    )
}

/// Runs the full evaluation described by `config`.
///
/// Dataset failures are isolated: they are reported in `run.json` and the
/// outcome, and the remaining datasets are still evaluated. A failing
/// reference aborts the run.
pub fn cmd_evaluate(config: &RunConfig) -> Result<EvaluateOutcome> {
    config.validate()?;
    let curve = PowerCurve::from_csv(&config.turbine_csv).map_err(|e| CliError::Config(e.to_string()))?;
    let default_mask = match &config.region.mask_path {
        Some(p) => {
            let m = read_wgrd(p).map_err(|e| CliError::Config(format!("region mask: {e}")))?;
            RegionSelection::whole_domain()
                .with_mask(m.clone())
                .map_err(|e| CliError::Config(format!("region mask: {e}")))?;
            Some(m)
        }
        None => None,
    };
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let pool = thread_pool()?;
    pool.install(|| evaluate_in(config, &curve, default_mask.as_ref(), &dir))
}

fn evaluate_in(
    config: &RunConfig,
    curve: &PowerCurve,
    default_mask: Option<&GriddedSeries>,
    dir: &Path,
) -> Result<EvaluateOutcome> {
    let prepared: Vec<std::result::Result<Prepared, String>> = config
        .datasets
        .par_iter()
        .map(|entry| {
            let result = prepare_dataset(entry, config, curve, default_mask).map_err(|e| e.to_string());
            let written = match &result {
                Ok(p) => write_dataset_summary(dir, p),
                Err(msg) => write_error_summary(dir, entry, msg),
            };
            match (result, written) {
                (Ok(p), Ok(())) => Ok(p),
                (Ok(_), Err(e)) => Err(e.to_string()),
                (Err(msg), _) => Err(msg),
            }
        })
        .collect();

    let mut statuses: Vec<DatasetStatus> = config
        .datasets
        .iter()
        .zip(&prepared)
        .map(|(entry, r)| DatasetStatus {
            id: entry.id.clone(),
            role: entry.role,
            status: if r.is_ok() { "ok" } else { "failed" },
            error: r.as_ref().err().cloned(),
        })
        .collect();

    let ref_idx = config
        .datasets
        .iter()
        .position(|d| d.role == Role::Reference)
        .expect("validated");
    let reference = match &prepared[ref_idx] {
        Ok(p) => p,
        Err(msg) => {
            write_run_meta(dir, config, statuses, Vec::new())?;
            return Err(CliError::Runtime(format!(
                "reference dataset {:?} failed: {msg}",
                config.datasets[ref_idx].id
            )));
        }
    };

    let comparisons: Vec<Option<std::result::Result<Comparison, String>>> = prepared
        .par_iter()
        .enumerate()
        .map(|(k, p)| match p {
            Ok(p) if k != ref_idx => Some(compare(reference, p, config).map_err(|e| e.to_string())),
            _ => None,
        })
        .collect();

    let mut metrics = vec![MetricsRow {
        source_id: reference.entry.id.clone(),
        mean: reference.sample.mean(),
        top_k_mean: reference.top_k_mean,
        js: None,
        w1: None,
    }];
    let mut power = vec![PowerRow {
        source_id: reference.entry.id.clone(),
        n_points: reference.power.n_points,
        n_steps: reference.power.n_steps,
        total_energy_wh: reference.power.total_energy,
        per_point_mean_power_w: reference.power.per_point_mean_power,
        relative_power_percent: relative_power_with(&reference.power, &reference.power, config.power_normalization)
            .map_err(CliError::from)?,
    }];
    let mut points = vec![PointsRow {
        source_id: reference.entry.id.clone(),
        points: reference.regression_points(),
    }];
    let mut evaluated: Vec<&Prepared> = vec![reference];

    for (k, comparison) in comparisons.into_iter().enumerate() {
        let Some(comparison) = comparison else { continue };
        let p = prepared[k].as_ref().expect("compared datasets prepared");
        match comparison {
            Ok(c) => {
                metrics.push(MetricsRow {
                    source_id: p.entry.id.clone(),
                    mean: p.sample.mean(),
                    top_k_mean: p.top_k_mean,
                    js: Some(c.js),
                    w1: Some(c.w1),
                });
                power.push(PowerRow {
                    source_id: p.entry.id.clone(),
                    n_points: p.power.n_points,
                    n_steps: p.power.n_steps,
                    total_energy_wh: p.power.total_energy,
                    per_point_mean_power_w: p.power.per_point_mean_power,
                    relative_power_percent: c.relative_power_percent,
                });
                points.push(PointsRow {
                    source_id: p.entry.id.clone(),
                    points: p.regression_points(),
                });
                evaluated.push(p);
            }
            Err(msg) => {
                warn!("{}: comparison failed: {msg}", p.entry.id);
                statuses[k].status = "failed";
                statuses[k].error = Some(msg);
            }
        }
    }

    tables::write_metrics(dir, &metrics)?;
    tables::write_power(dir, &power)?;
    tables::write_points(dir, &points)?;
    write_overlay_kde(dir, &evaluated, config)?;

    let (regression, skipped) = regress_metrics(&metrics, &points, config)?;
    tables::write_regression_csv(&dir.join(tables::REGRESSION_CSV), &regression)?;
    tables::write_json(
        &dir.join(tables::REGRESSION_JSON),
        &serde_json::json!({ "log_base": config.log_base.as_str(), "rows": regression }),
    )?;

    let failures = statuses
        .iter()
        .filter_map(|s| s.error.as_ref().map(|e| (s.id.clone(), e.clone())))
        .collect();
    write_run_meta(dir, config, statuses, skipped)?;
    Ok(EvaluateOutcome {
        run_dir: dir.to_path_buf(),
        failures,
    })
}

fn regress_metrics(
    metrics: &[MetricsRow],
    points: &[PointsRow],
    config: &RunConfig,
) -> Result<(Vec<RegressionRow>, Vec<SkippedRegression>)> {
    let table = NumericTable {
        key: "source_id".into(),
        columns: ["mean", "top_k_mean", "js", "w1"].map(String::from).to_vec(),
        rows: metrics
            .iter()
            .map(|m| (m.source_id.clone(), vec![Some(m.mean), Some(m.top_k_mean), m.js, m.w1]))
            .collect(),
    };
    let by_id = points.iter().map(|p| (p.source_id.clone(), p.points as f64)).collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (metric, fit) in regress_columns(&table, &by_id, config.log_base)? {
        match fit {
            Ok(fit) => rows.push(RegressionRow::new(metric, &fit)),
            Err(e) => skipped.push(SkippedRegression {
                metric,
                reason: e.to_string(),
            }),
        }
    }
    Ok((rows, skipped))
}

/// Densities of all evaluated datasets on one grid, for plotting.
fn write_overlay_kde(dir: &Path, evaluated: &[&Prepared], config: &RunConfig) -> Result<()> {
    let samples: Vec<&EmpiricalSample> = evaluated.iter().map(|p| &p.sample).collect();
    let bandwidths: Vec<f64> = evaluated.iter().map(|p| p.bandwidth).collect();
    let grid = SpeedGrid::shared(&samples, &bandwidths, config.kde_grid_size)?;
    let curves = evaluated
        .par_iter()
        .map(|p| kde_eval(&p.sample, &grid, p.bandwidth).map(|d| (p.entry.id.clone(), d.raw)))
        .collect::<windbench_core::Result<Vec<_>>>()?;
    tables::write_kde(dir, &grid.points(), &curves)
}

fn write_run_meta(
    dir: &Path,
    config: &RunConfig,
    datasets: Vec<DatasetStatus>,
    skipped_regressions: Vec<SkippedRegression>,
) -> Result<()> {
    tables::write_json(
        &dir.join(tables::RUN_JSON),
        &RunMeta {
            generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            tool_version: env!("CARGO_PKG_VERSION"),
            log_base: config.log_base.as_str(),
            config,
            datasets,
            skipped_regressions,
        },
    )
}
