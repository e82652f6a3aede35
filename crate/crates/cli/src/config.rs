//! JSON run configuration.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use windbench_core::dist::{DEFAULT_KDE_GRID_SIZE, DEFAULT_TOP_K};
use windbench_core::wind::NEUTRAL_ALPHA;
use windbench_core::{LogBase, PowerNormalization, RegionSelection, WindParams};

use crate::error::{CliError, Result};

/// Smallest accepted KDE evaluation grid.
pub const MIN_KDE_GRID_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Reference,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub id: String,
    pub u_path: PathBuf,
    pub v_path: PathBuf,
    /// Variable names inside the WGRD files; first variable when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_var: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_var: Option<String>,
    pub role: Role,
    #[serde(default = "default_ref_height")]
    pub ref_height_m: f64,
    /// Overrides the counted grid points as regression input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub declared_points: Option<usize>,
    /// Land mask on this dataset's grid; falls back to the region mask.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
}

fn default_ref_height() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask_path: Option<PathBuf>,
}

impl Default for RegionConfig {
    /// Europe: 25°N–73°N, 30°W–42°E.
    fn default() -> Self {
        RegionConfig {
            lat_min: 25.0,
            lat_max: 73.0,
            lon_min: -30.0,
            lon_max: 42.0,
            mask_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub region: RegionConfig,
    #[serde(default = "default_hub_height")]
    pub hub_height_m: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_kde_grid_size")]
    pub kde_grid_size: usize,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    pub turbine_csv: PathBuf,
    pub time_window: TimeWindow,
    #[serde(default = "default_step_hours")]
    pub step_hours: f64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub log_base: LogBase,
    #[serde(default)]
    pub power_normalization: PowerNormalization,
    pub datasets: Vec<DatasetEntry>,
}

fn default_hub_height() -> f64 {
    126.0
}

fn default_alpha() -> f64 {
    NEUTRAL_ALPHA
}

fn default_kde_grid_size() -> usize {
    DEFAULT_KDE_GRID_SIZE
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

fn default_step_hours() -> f64 {
    6.0
}

impl RunConfig {
    /// Parses and validates a config file. Relative paths resolve against
    /// the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.turbine_csv);
        fix(&mut self.output_dir);
        if let Some(m) = self.region.mask_path.as_mut() {
            fix(m);
        }
        for d in &mut self.datasets {
            fix(&mut d.u_path);
            fix(&mut d.v_path);
            if let Some(m) = d.mask_path.as_mut() {
                fix(m);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        let references = self.datasets.iter().filter(|d| d.role == Role::Reference).count();
        if references != 1 {
            return fail(format!("exactly one reference dataset required, found {references}"));
        }
        if !self.datasets.iter().any(|d| d.role == Role::Candidate) {
            return fail("at least one candidate dataset required".into());
        }
        let mut seen = BTreeSet::new();
        for d in &self.datasets {
            if d.id.is_empty() || d.id.contains(['/', '\\', ',', '"', '\n']) || d.id == "." || d.id == ".." {
                return fail(format!("dataset id {:?} is not a valid label", d.id));
            }
            if !seen.insert(d.id.as_str()) {
                return fail(format!("duplicate dataset id {:?}", d.id));
            }
            if !(d.ref_height_m > 0.0 && d.ref_height_m.is_finite()) {
                return fail(format!("dataset {:?}: ref_height_m must be positive", d.id));
            }
            if d.declared_points == Some(0) {
                return fail(format!("dataset {:?}: declared_points must be positive", d.id));
            }
        }
        if self.kde_grid_size < MIN_KDE_GRID_SIZE {
            return fail(format!(
                "kde_grid_size must be at least {MIN_KDE_GRID_SIZE}, got {}",
                self.kde_grid_size
            ));
        }
        if self.top_k == 0 {
            return fail("top_k must be positive".into());
        }
        if self.time_window.end <= self.time_window.start {
            return fail(format!(
                "time window [{}, {}) is empty",
                self.time_window.start, self.time_window.end
            ));
        }
        if !(self.step_hours > 0.0 && self.step_hours.is_finite()) {
            return fail(format!("step_hours must be positive, got {}", self.step_hours));
        }
        self.wind_params(10.0)
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.region_bounds()?;
        Ok(())
    }

    pub fn wind_params(&self, ref_height_m: f64) -> WindParams {
        WindParams {
            alpha: self.alpha,
            h_ref: ref_height_m,
            h_hub: self.hub_height_m,
        }
    }

    /// The region rectangle without any mask.
    pub fn region_bounds(&self) -> Result<RegionSelection> {
        let r = &self.region;
        RegionSelection::new(r.lat_min, r.lat_max, r.lon_min, r.lon_max).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn reference(&self) -> &DatasetEntry {
        self.datasets
            .iter()
            .find(|d| d.role == Role::Reference)
            .expect("validated: one reference")
    }

    pub fn window_seconds(&self) -> (i64, i64) {
        (self.time_window.start.timestamp(), self.time_window.end.timestamp())
    }
}
