//! Evaluation of gridded wind datasets against a reference dataset for
//! wind-resource assessment.
//!
//! The pipeline: velocity components become speeds ([`wind`]), are scaled to
//! hub height, restricted to a region ([`grid`]), pooled into samples and
//! compared by distribution distances ([`dist`]), converted to turbine power
//! ([`power`]), and finally regressed against spatial resolution
//! ([`regression`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod error;
pub mod grid;
pub mod numeric;
pub mod oracle;
pub mod power;
pub mod regression;
pub mod wind;

pub use dist::{
    js_distance, js_distance_pmf, kde_eval, scott_bandwidth, top_k_mean, w1_distance, DensityEstimate, EmpiricalSample,
    SpeedGrid,
};
pub use error::{Error, Result};
pub use grid::{
    count_points, read_wgrd, regrid_bilinear, select_region, write_wgrd, GridKind, GridSpec, GriddedSeries,
    RegionSelection,
};
pub use power::{
    cumulative_power, relative_power, relative_power_with, PowerCurve, PowerNormalization, PowerSummary, TurbineMeta,
};
pub use regression::{f_cdf_complement, loglinear_fit, LogBase, RegressionResult};
pub use wind::{extrapolate_height, wind_speed, WindParams};
