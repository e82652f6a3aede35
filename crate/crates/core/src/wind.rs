//! Wind speed from velocity components and power-law height extrapolation.

use ndarray::Zip;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GriddedSeries;

/// Shear exponent for neutral stability.
pub const NEUTRAL_ALPHA: f64 = 1.0 / 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindParams {
    pub alpha: f64,
    /// Height of the input speeds, m.
    pub h_ref: f64,
    /// Target (hub) height, m.
    pub h_hub: f64,
}

impl Default for WindParams {
    fn default() -> Self {
        WindParams {
            alpha: NEUTRAL_ALPHA,
            h_ref: 10.0,
            h_hub: 126.0,
        }
    }
}

impl WindParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("h_ref", self.h_ref), ("h_hub", self.h_hub)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Multiplier `(h_hub / h_ref)^alpha`.
    pub fn factor(&self) -> Result<f64> {
        self.validate()?;
        Ok((self.h_hub / self.h_ref).powf(self.alpha))
    }
}

/// Elementwise `sqrt(u² + v²)`.
pub fn wind_speed(u: &GriddedSeries, v: &GriddedSeries) -> Result<GriddedSeries> {
    if u.grid() != v.grid() {
        return Err(Error::ShapeMismatch("u and v are on different grids".into()));
    }
    if u.times() != v.times() {
        return Err(Error::ShapeMismatch("u and v have different time axes".into()));
    }
    let w = Zip::from(u.values())
        .and(v.values())
        .par_map_collect(|&a, &b| a.hypot(b));
    u.with_values(w, "wind_speed", "m/s")
}

/// Scales speeds by `(h_hub / h_ref)^alpha`.
pub fn extrapolate_height(w: &GriddedSeries, params: &WindParams) -> Result<GriddedSeries> {
    let factor = params.factor()?;
    if let Some(bad) = w.values().iter().find(|&&x| x < 0.0) {
        return Err(Error::InvalidParameter(format!("negative wind speed {bad}")));
    }
    let scaled = w.values().mapv(|x| x * factor);
    w.with_values(scaled, w.name().to_string(), w.units().to_string())
}
