//! Gridded data containers, spatial selection and regridding.
//!
//! A [`GriddedSeries`] holds one physical variable as a `time × lat × lon`
//! array on either a regular (1-D axes) or curvilinear (2-D coordinate
//! fields) grid. Missing values are NaN throughout.

mod regrid;
mod wgrd;

use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};

pub use regrid::{regrid_bilinear, Regridded};
pub use wgrd::{decode_wgrd, encode_wgrd, read_wgrd, read_wgrd_all, write_wgrd, write_wgrd_all};

/// Tolerance, in degrees, when matching a mask grid against a data grid.
const COORD_MATCH_TOL: f64 = 1e-6;

/// Maps a longitude onto `[-180, 180)`.
pub fn normalize_lon(lon: f64) -> f64 {
    let wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if wrapped >= 180.0 {
        wrapped - 360.0
    } else {
        wrapped
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Regular,
    Curvilinear,
}

/// Horizontal grid geometry.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Separable axes; `lat` has length `n_y`, `lon` has length `n_x`.
    Regular { lat: Array1<f64>, lon: Array1<f64> },
    /// Per-point coordinates, both `n_y × n_x`.
    Curvilinear { lat: Array2<f64>, lon: Array2<f64> },
}

fn strictly_monotonic(axis: &Array1<f64>) -> bool {
    if axis.len() < 2 {
        return true;
    }
    let increasing = axis[1] > axis[0];
    axis.windows(2)
        .into_iter()
        .all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn check_lat_range<'a>(mut lats: impl Iterator<Item = &'a f64>) -> Result<()> {
    if let Some(bad) = lats.find(|v| !(-90.0..=90.0).contains(*v)) {
        return Err(Error::InvalidGrid(format!("latitude {bad} outside [-90, 90]")));
    }
    Ok(())
}

impl GridSpec {
    /// Builds a regular grid, normalizing longitudes to `[-180, 180)`.
    pub fn regular(lat: Array1<f64>, lon: Array1<f64>) -> Result<Self> {
        if lat.is_empty() || lon.is_empty() {
            return Err(Error::InvalidGrid("regular grid axes must be nonempty".into()));
        }
        check_lat_range(lat.iter())?;
        let lon = lon.mapv(normalize_lon);
        if !strictly_monotonic(&lat) {
            return Err(Error::InvalidGrid("latitude axis is not strictly monotonic".into()));
        }
        if !strictly_monotonic(&lon) {
            return Err(Error::InvalidGrid(
                "longitude axis is not strictly monotonic after normalization to [-180, 180)".into(),
            ));
        }
        Ok(GridSpec::Regular { lat, lon })
    }

    /// Builds a curvilinear grid from 2-D coordinate fields.
    pub fn curvilinear(lat: Array2<f64>, lon: Array2<f64>) -> Result<Self> {
        if lat.dim() != lon.dim() {
            return Err(Error::InvalidGrid(format!(
                "lat field {:?} and lon field {:?} differ in shape",
                lat.dim(),
                lon.dim()
            )));
        }
        if lat.is_empty() {
            return Err(Error::InvalidGrid("curvilinear grid must be nonempty".into()));
        }
        check_lat_range(lat.iter())?;
        if lon.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite longitude".into()));
        }
        Ok(GridSpec::Curvilinear {
            lat,
            lon: lon.mapv(normalize_lon),
        })
    }

    pub fn kind(&self) -> GridKind {
        match self {
            GridSpec::Regular { .. } => GridKind::Regular,
            GridSpec::Curvilinear { .. } => GridKind::Curvilinear,
        }
    }

    /// `(n_y, n_x)`
    pub fn shape(&self) -> (usize, usize) {
        match self {
            GridSpec::Regular { lat, lon } => (lat.len(), lon.len()),
            GridSpec::Curvilinear { lat, .. } => lat.dim(),
        }
    }

    pub fn n_points(&self) -> usize {
        let (ny, nx) = self.shape();
        ny * nx
    }

    /// `(lat, lon)` of grid point `(j, i)`.
    pub fn point(&self, j: usize, i: usize) -> (f64, f64) {
        match self {
            GridSpec::Regular { lat, lon } => (lat[j], lon[i]),
            GridSpec::Curvilinear { lat, lon } => (lat[[j, i]], lon[[j, i]]),
        }
    }

    fn crop(&self, rows: std::ops::RangeInclusive<usize>, cols: std::ops::RangeInclusive<usize>) -> Self {
        match self {
            GridSpec::Regular { lat, lon } => GridSpec::Regular {
                lat: lat.slice(s![rows]).to_owned(),
                lon: lon.slice(s![cols]).to_owned(),
            },
            GridSpec::Curvilinear { lat, lon } => GridSpec::Curvilinear {
                lat: lat.slice(s![rows.clone(), cols.clone()]).to_owned(),
                lon: lon.slice(s![rows, cols]).to_owned(),
            },
        }
    }

    /// Same shape and coordinates within [`COORD_MATCH_TOL`] degrees.
    pub fn matches(&self, other: &GridSpec) -> bool {
        if self.shape() != other.shape() {
            return false;
        }
        let (ny, nx) = self.shape();
        (0..ny).all(|j| {
            (0..nx).all(|i| {
                let (a_lat, a_lon) = self.point(j, i);
                let (b_lat, b_lon) = other.point(j, i);
                (a_lat - b_lat).abs() <= COORD_MATCH_TOL && (a_lon - b_lon).abs() <= COORD_MATCH_TOL
            })
        })
    }
}

/// One variable on a grid over time.
///
/// Equality treats NaN as equal to NaN, so masked series compare sensibly.
#[derive(Debug, Clone)]
pub struct GriddedSeries {
    grid: GridSpec,
    times: Vec<i64>,
    values: Array3<f64>,
    name: String,
    units: String,
    /// Points excluded by a previous region selection. `None` means all active.
    active: Option<Array2<bool>>,
}

impl PartialEq for GriddedSeries {
    fn eq(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.times == other.times
            && self.name == other.name
            && self.units == other.units
            && self.active == other.active
            && self.values.dim() == other.values.dim()
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .all(|(a, b)| a == b || (a.is_nan() && b.is_nan()))
    }
}

impl GriddedSeries {
    pub fn new(
        grid: GridSpec,
        times: Vec<i64>,
        values: Array3<f64>,
        name: impl Into<String>,
        units: impl Into<String>,
    ) -> Result<Self> {
        let (ny, nx) = grid.shape();
        if values.dim() != (times.len(), ny, nx) {
            return Err(Error::ShapeMismatch(format!(
                "values {:?} do not match (n_t, n_y, n_x) = ({}, {ny}, {nx})",
                values.dim(),
                times.len()
            )));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "times not strictly increasing: {} followed by {}",
                w[0], w[1]
            )));
        }
        Ok(GriddedSeries {
            grid,
            times,
            values,
            name: name.into(),
            units: units.into(),
            active: None,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn times(&self) -> &[i64] {
        &self.times
    }

    pub fn values(&self) -> &Array3<f64> {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Mask of points still active after region selection, if any were excluded.
    pub fn active_mask(&self) -> Option<ArrayView2<'_, bool>> {
        self.active.as_ref().map(|m| m.view())
    }

    pub fn is_active(&self, j: usize, i: usize) -> bool {
        self.active.as_ref().is_none_or(|m| m[[j, i]])
    }

    pub fn active_point_count(&self) -> usize {
        match &self.active {
            Some(m) => m.iter().filter(|&&a| a).count(),
            None => self.grid.n_points(),
        }
    }

    /// Same grid, times and activity mask with new values and metadata.
    pub fn with_values(&self, values: Array3<f64>, name: impl Into<String>, units: impl Into<String>) -> Result<Self> {
        if values.dim() != self.values.dim() {
            return Err(Error::ShapeMismatch(format!(
                "replacement values {:?} differ from {:?}",
                values.dim(),
                self.values.dim()
            )));
        }
        Ok(GriddedSeries {
            grid: self.grid.clone(),
            times: self.times.clone(),
            values,
            name: name.into(),
            units: units.into(),
            active: self.active.clone(),
        })
    }

    pub fn rename(mut self, name: impl Into<String>, units: impl Into<String>) -> Self {
        self.name = name.into();
        self.units = units.into();
        self
    }

    /// Restricts the series to time steps in `[start, end)` (seconds since epoch).
    pub fn select_times(&self, start: i64, end: i64) -> GriddedSeries {
        let lo = self.times.partition_point(|&t| t < start);
        let hi = self.times.partition_point(|&t| t < end).max(lo);
        GriddedSeries {
            grid: self.grid.clone(),
            times: self.times[lo..hi].to_vec(),
            values: self.values.slice(s![lo..hi, .., ..]).to_owned(),
            name: self.name.clone(),
            units: self.units.clone(),
            active: self.active.clone(),
        }
    }

    /// Uniform step in seconds, or `None` with fewer than two time steps.
    pub fn time_step(&self) -> Result<Option<i64>> {
        if self.times.len() < 2 {
            return Ok(None);
        }
        let step = self.times[1] - self.times[0];
        if let Some((k, w)) = self.times.windows(2).enumerate().find(|(_, w)| w[1] - w[0] != step) {
            return Err(Error::NonUniformTime(format!(
                "step {} s at index {k} differs from initial step {step} s",
                w[1] - w[0]
            )));
        }
        Ok(Some(step))
    }

    /// Values at active points, NaN included, in `(t, y, x)` order.
    pub fn active_values(&self) -> Vec<f64> {
        match &self.active {
            None => self.values.iter().copied().collect(),
            Some(mask) => self
                .values
                .axis_iter(Axis(0))
                .flat_map(|slab| {
                    slab.indexed_iter()
                        .filter(|(idx, _)| mask[*idx])
                        .map(|(_, &v)| v)
                        .collect::<Vec<_>>()
                })
                .collect(),
        }
    }

    /// Raw constructor for crate-internal transforms that already uphold invariants.
    pub(crate) fn from_parts(
        grid: GridSpec,
        times: Vec<i64>,
        values: Array3<f64>,
        name: String,
        units: String,
        active: Option<Array2<bool>>,
    ) -> Self {
        GriddedSeries {
            grid,
            times,
            values,
            name,
            units,
            active,
        }
    }
}

/// Rectangle (closed bounds, degrees) plus an optional 0/1 land mask.
#[derive(Debug, Clone)]
pub struct RegionSelection {
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
    land_mask: Option<GriddedSeries>,
}

impl RegionSelection {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        if !(lat_min < lat_max) {
            return Err(Error::InvalidParameter(format!(
                "lat_min ({lat_min}) must be below lat_max ({lat_max})"
            )));
        }
        if !(lon_min < lon_max) {
            return Err(Error::InvalidParameter(format!(
                "lon_min ({lon_min}) must be below lon_max ({lon_max})"
            )));
        }
        Ok(RegionSelection {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
            land_mask: None,
        })
    }

    /// The whole globe, no mask.
    pub fn whole_domain() -> Self {
        RegionSelection {
            lat_min: -90.0,
            lat_max: 90.0,
            lon_min: -180.0,
            lon_max: 180.0,
            land_mask: None,
        }
    }

    /// Attaches a land mask: `n_t = 1`, values exactly 0 or 1.
    pub fn with_mask(mut self, mask: GriddedSeries) -> Result<Self> {
        if mask.n_times() != 1 {
            return Err(Error::MaskGridMismatch(format!(
                "land mask must have exactly one time step, found {}",
                mask.n_times()
            )));
        }
        if let Some(bad) = mask.values.iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidParameter(format!("land mask value {bad} is not 0 or 1")));
        }
        self.land_mask = Some(mask);
        Ok(self)
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (self.lat_min, self.lat_max, self.lon_min, self.lon_max)
    }

    pub fn land_mask(&self) -> Option<&GriddedSeries> {
        self.land_mask.as_ref()
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min && lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }

    /// Per-point inclusion on `series`' grid, honoring any prior selection.
    fn inclusion(&self, series: &GriddedSeries) -> Result<Array2<bool>> {
        let (ny, nx) = series.grid.shape();
        if let Some(mask) = &self.land_mask {
            if !mask.grid.matches(&series.grid) {
                return Err(Error::MaskGridMismatch(format!(
                    "mask grid {:?} does not match data grid {:?}",
                    mask.grid.shape(),
                    series.grid.shape()
                )));
            }
        }
        Ok(Array2::from_shape_fn((ny, nx), |(j, i)| {
            let (lat, lon) = series.grid.point(j, i);
            series.is_active(j, i)
                && self.contains(lat, lon)
                && self.land_mask.as_ref().is_none_or(|m| m.values[[0, j, i]] == 1.0)
        }))
    }
}

/// Restricts `series` to the points inside `region`.
///
/// The result is cropped to the index bounding box of the included points;
/// points inside that box but excluded by the rectangle or mask are set to
/// NaN and marked inactive, so [`count_points`] on the result with the whole
/// domain reproduces the count here.
pub fn select_region(series: &GriddedSeries, region: &RegionSelection) -> Result<GriddedSeries> {
    let include = region.inclusion(series)?;
    let mut rows: Option<(usize, usize)> = None;
    let mut cols: Option<(usize, usize)> = None;
    for ((j, i), _) in include.indexed_iter().filter(|(_, &inc)| inc) {
        rows = Some(rows.map_or((j, j), |(a, b)| (a.min(j), b.max(j))));
        cols = Some(cols.map_or((i, i), |(a, b)| (a.min(i), b.max(i))));
    }
    let ((j0, j1), (i0, i1)) = match (rows, cols) {
        (Some(r), Some(c)) => (r, c),
        _ => return Err(Error::EmptyRegion),
    };

    let grid = series.grid.crop(j0..=j1, i0..=i1);
    let active = include.slice(s![j0..=j1, i0..=i1]).to_owned();
    let mut values = series.values.slice(s![.., j0..=j1, i0..=i1]).to_owned();
    for mut slab in values.axis_iter_mut(Axis(0)) {
        ndarray::Zip::from(&mut slab).and(&active).for_each(|v, &a| {
            if !a {
                *v = f64::NAN;
            }
        });
    }
    let active = if active.iter().all(|&a| a) { None } else { Some(active) };
    Ok(GriddedSeries::from_parts(
        grid,
        series.times.clone(),
        values,
        series.name.clone(),
        series.units.clone(),
        active,
    ))
}

/// Number of active grid points inside `region` (and its mask).
pub fn count_points(series: &GriddedSeries, region: &RegionSelection) -> Result<usize> {
    let n = region.inclusion(series)?.iter().filter(|&&inc| inc).count();
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(n)
}
