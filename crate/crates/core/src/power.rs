//! Turbine power curves and cumulative power over gridded wind speeds.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GriddedSeries;
use crate::numeric::pairwise_sum;

/// Tabulated turbine power curve, linearly interpolated between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    knots: Vec<(f64, f64)>,
    meta: TurbineMeta,
}

/// Sidecar metadata accompanying a power-curve CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineMeta {
    pub name: String,
    pub hub_height_m: f64,
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
    pub rated_power_w: f64,
}

#[derive(Debug, Deserialize)]
struct KnotRow {
    wind_speed_ms: f64,
    power_w: f64,
}

impl PowerCurve {
    pub fn new(knots: Vec<(f64, f64)>, meta: TurbineMeta) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidPowerCurve(format!("{}: {msg}", meta.name)));
        if knots.len() < 2 {
            return bad(format!("need at least 2 knots, got {}", knots.len()));
        }
        if !(meta.cut_in < meta.rated_speed && meta.rated_speed < meta.cut_out) {
            return bad(format!(
                "expected cut_in < rated_speed < cut_out, got {} / {} / {}",
                meta.cut_in, meta.rated_speed, meta.cut_out
            ));
        }
        if !(meta.rated_power_w > 0.0 && meta.rated_power_w.is_finite()) {
            return bad(format!("rated power must be positive, got {}", meta.rated_power_w));
        }
        if !(meta.cut_in >= 0.0) {
            return bad(format!("cut-in speed must be nonnegative, got {}", meta.cut_in));
        }
        for (k, &(speed, power)) in knots.iter().enumerate() {
            if !speed.is_finite() || !power.is_finite() {
                return bad(format!("knot {k} is not finite"));
            }
            if k > 0 && speed <= knots[k - 1].0 {
                return bad(format!("knot speeds not strictly increasing at knot {k} ({speed} m/s)"));
            }
            if !(0.0..=meta.rated_power_w).contains(&power) {
                return bad(format!("knot power {power} W at {speed} m/s outside [0, rated power]"));
            }
            if speed < meta.cut_in && power != 0.0 {
                return bad(format!("nonzero power {power} W below cut-in at {speed} m/s"));
            }
        }
        Ok(PowerCurve { knots, meta })
    }

    /// Reads `wind_speed_ms,power_w` rows plus the JSON sidecar metadata.
    pub fn from_files(csv_path: impl AsRef<Path>, meta_path: impl AsRef<Path>) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        let meta_path = meta_path.as_ref();
        let meta_text = std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
        let meta: TurbineMeta = serde_json::from_str(&meta_text)?;
        let file = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let headers = reader.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["wind_speed_ms", "power_w"] {
            return Err(Error::InvalidPowerCurve(format!(
                "{}: header must be `wind_speed_ms,power_w`, found `{}`",
                csv_path.display(),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let knots = reader
            .deserialize::<KnotRow>()
            .map(|row| row.map(|r| (r.wind_speed_ms, r.power_w)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        PowerCurve::new(knots, meta)
    }

    /// Loads a curve whose sidecar sits next to the CSV with a `.json` extension.
    pub fn from_csv(csv_path: impl AsRef<Path>) -> Result<Self> {
        let csv_path = csv_path.as_ref();
        PowerCurve::from_files(csv_path, sidecar_path(csv_path))
    }

    pub fn meta(&self) -> &TurbineMeta {
        &self.meta
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn rated_power(&self) -> f64 {
        self.meta.rated_power_w
    }

    /// Power in W at speed `w` in m/s. NaN maps to 0.
    pub fn power_at(&self, w: f64) -> f64 {
        if w.is_nan() || w < self.meta.cut_in || w > self.meta.cut_out {
            return 0.0;
        }
        let k = self.knots.partition_point(|&(s, _)| s < w);
        if k == 0 {
            return self.knots[0].1;
        }
        if k == self.knots.len() {
            return self.knots[k - 1].1;
        }
        let (s1, p1) = self.knots[k - 1];
        let (s2, p2) = self.knots[k];
        if s2 == w {
            return p2;
        }
        p1 + (p2 - p1) * ((w - s1) / (s2 - s1))
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Energy totals of one dataset over its grid and time axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    /// Wh
    pub total_energy: f64,
    /// W, averaged over points and steps.
    pub per_point_mean_power: f64,
    pub n_points: usize,
    pub n_steps: usize,
    pub step_hours: f64,
    /// Missing (NaN) speeds, counted as zero power.
    pub n_missing: usize,
}

/// Sums turbine power over all active grid points and time steps.
///
/// `step_hours` is the time-step duration; with two or more steps it must
/// agree with the series' uniform time axis.
pub fn cumulative_power(series: &GriddedSeries, curve: &PowerCurve, step_hours: f64) -> Result<PowerSummary> {
    if !(step_hours > 0.0 && step_hours.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "step duration must be positive, got {step_hours} h"
        )));
    }
    if let Some(step) = series.time_step()? {
        let declared = step_hours * 3600.0;
        if (step as f64 - declared).abs() > 1e-6 {
            return Err(Error::NonUniformTime(format!(
                "time axis step is {step} s but {step_hours} h ({declared} s) was declared"
            )));
        }
    }
    let speeds = series.active_values();
    let n_missing = speeds.iter().filter(|w| w.is_nan()).count();
    let power: Vec<f64> = speeds.iter().map(|&w| curve.power_at(w)).collect();
    let total_energy = pairwise_sum(&power) * step_hours;
    let n_points = series.active_point_count();
    let n_steps = series.n_times();
    let denom = (n_points * n_steps) as f64 * step_hours;
    Ok(PowerSummary {
        total_energy,
        per_point_mean_power: if denom > 0.0 { total_energy / denom } else { 0.0 },
        n_points,
        n_steps,
        step_hours,
        n_missing,
    })
}

/// How candidate and reference power are made comparable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerNormalization {
    /// Mean power per grid point and step; independent of grid density.
    #[default]
    PerPointMean,
    /// Raw energy totals.
    RawTotal,
}

/// Percent deviation of `model` from `reference` per-point mean power.
pub fn relative_power(model: &PowerSummary, reference: &PowerSummary) -> Result<f64> {
    relative_power_with(model, reference, PowerNormalization::PerPointMean)
}

pub fn relative_power_with(
    model: &PowerSummary,
    reference: &PowerSummary,
    normalization: PowerNormalization,
) -> Result<f64> {
    let (m, r) = match normalization {
        PowerNormalization::PerPointMean => (model.per_point_mean_power, reference.per_point_mean_power),
        PowerNormalization::RawTotal => (model.total_energy, reference.total_energy),
    };
    if !(r > 0.0) {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * (m / r - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use ndarray::{Array1, Array3};
    use proptest::prelude::*;

    fn meta() -> TurbineMeta {
        TurbineMeta {
            name: "test".into(),
            hub_height_m: 100.0,
            cut_in: 3.0,
            rated_speed: 12.0,
            cut_out: 25.0,
            rated_power_w: 3.0e6,
        }
    }

    pub(crate) fn curve() -> PowerCurve {
        PowerCurve::new(
            vec![
                (0.0, 0.0),
                (3.0, 1.0e5),
                (6.0, 8.0e5),
                (9.0, 2.0e6),
                (12.0, 3.0e6),
                (25.0, 3.0e6),
            ],
            meta(),
        )
        .unwrap()
    }

    fn series(values: Array3<f64>, step_s: i64) -> GriddedSeries {
        let (nt, ny, nx) = values.dim();
        let grid = GridSpec::regular(Array1::linspace(40.0, 41.0, ny), Array1::linspace(0.0, 1.0, nx)).unwrap();
        let times = (0..nt as i64).map(|k| k * step_s).collect();
        GriddedSeries::new(grid, times, values, "w", "m/s").unwrap()
    }

    #[test]
    fn power_at_semantics() {
        let c = curve();
        assert_eq!(c.power_at(2.9), 0.0);
        assert_eq!(c.power_at(25.1), 0.0);
        assert_eq!(c.power_at(25.0), 3.0e6);
        assert_eq!(c.power_at(3.0), 1.0e5);
        assert_eq!(c.power_at(6.0), 8.0e5);
        assert_eq!(c.power_at(7.5), 1.4e6);
        assert_eq!(c.power_at(f64::NAN), 0.0);
        assert_eq!(c.power_at(18.0), 3.0e6);
    }

    #[test]
    fn invalid_curves_rejected() {
        let knots = || vec![(3.0, 0.0), (12.0, 3.0e6), (25.0, 3.0e6)];
        assert!(PowerCurve::new(vec![(3.0, 0.0), (3.0, 1.0)], meta()).is_err());
        assert!(PowerCurve::new(vec![(3.0, 0.0), (12.0, 4.0e6)], meta()).is_err());
        assert!(PowerCurve::new(vec![(1.0, 5.0), (12.0, 1.0)], meta()).is_err());
        assert!(PowerCurve::new(
            knots(),
            TurbineMeta {
                rated_speed: 30.0,
                ..meta()
            }
        )
        .is_err());
        assert!(PowerCurve::new(
            knots(),
            TurbineMeta {
                rated_power_w: 0.0,
                ..meta()
            }
        )
        .is_err());
        assert!(PowerCurve::new(knots(), meta()).is_ok());
    }

    #[test]
    fn loads_csv_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("t.csv");
        std::fs::write(&csv, "wind_speed_ms,power_w\n3.0,0\n12,3000000\n25,3000000\n").unwrap();
        std::fs::write(sidecar_path(&csv), serde_json::to_string(&meta()).unwrap()).unwrap();
        let c = PowerCurve::from_csv(&csv).unwrap();
        assert_eq!(c.knots().len(), 3);
        assert_eq!(c.power_at(7.5), 1.5e6);

        std::fs::write(&csv, "speed,power\n3,0\n").unwrap();
        assert!(matches!(PowerCurve::from_csv(&csv), Err(Error::InvalidPowerCurve(_))));
    }

    #[test]
    fn cumulative_examples() {
        let c = curve();
        let calm = series(Array3::from_elem((3, 2, 2), 1.0), 21_600);
        assert_eq!(cumulative_power(&calm, &c, 6.0).unwrap().total_energy, 0.0);

        let one = series(Array3::from_elem((1, 1, 1), 12.0), 21_600);
        let s1 = cumulative_power(&one, &c, 6.0).unwrap();
        assert_eq!(s1.total_energy, 6.0 * 3.0e6);

        let cell = series(Array3::from_elem((1, 1, 1), 8.0), 21_600);
        let grid = series(Array3::from_elem((2, 2, 2), 8.0), 21_600);
        let e1 = cumulative_power(&cell, &c, 6.0).unwrap().total_energy;
        let s8 = cumulative_power(&grid, &c, 6.0).unwrap();
        assert_eq!(s8.total_energy, 8.0 * e1);
        assert_eq!(s8.per_point_mean_power, c.power_at(8.0));
    }

    #[test]
    fn step_mismatch_and_nonuniform_axis() {
        let c = curve();
        let s = series(Array3::from_elem((3, 1, 1), 8.0), 3_600);
        assert!(matches!(cumulative_power(&s, &c, 6.0), Err(Error::NonUniformTime(_))));
        let grid = s.grid().clone();
        let ragged = GriddedSeries::new(
            grid,
            vec![0, 21_600, 50_000],
            Array3::from_elem((3, 1, 1), 8.0),
            "w",
            "m/s",
        )
        .unwrap();
        assert!(matches!(
            cumulative_power(&ragged, &c, 6.0),
            Err(Error::NonUniformTime(_))
        ));
    }

    #[test]
    fn missing_values_count_as_zero() {
        let mut v = Array3::from_elem((2, 1, 2), 12.0);
        v[[0, 0, 1]] = f64::NAN;
        let s = cumulative_power(&series(v, 21_600), &curve(), 6.0).unwrap();
        assert_eq!(s.n_missing, 1);
        assert_eq!(s.total_energy, 3.0 * 6.0 * 3.0e6);
    }

    #[test]
    fn relative_examples() {
        let base = PowerSummary {
            total_energy: 1000.0,
            per_point_mean_power: 10.0,
            n_points: 4,
            n_steps: 25,
            step_hours: 1.0,
            n_missing: 0,
        };
        assert_eq!(relative_power(&base, &base).unwrap(), 0.0);
        let double = PowerSummary {
            per_point_mean_power: 20.0,
            ..base
        };
        assert_eq!(relative_power(&double, &base).unwrap(), 100.0);
        let sparse = PowerSummary {
            total_energy: 500.0,
            n_points: 2,
            ..base
        };
        assert_eq!(relative_power(&sparse, &base).unwrap(), 0.0);
        assert_eq!(
            relative_power_with(&sparse, &base, PowerNormalization::RawTotal).unwrap(),
            -50.0
        );
        let zero = PowerSummary {
            per_point_mean_power: 0.0,
            total_energy: 0.0,
            ..base
        };
        assert!(matches!(relative_power(&base, &zero), Err(Error::ZeroReference)));
    }

    proptest! {
        #[test]
        fn power_bounded_and_monotone_to_rated(w in 0.0..40.0f64, dw in 0.0..5.0f64) {
            let c = curve();
            let p = c.power_at(w);
            prop_assert!((0.0..=c.rated_power()).contains(&p));
            let (a, b) = (w.clamp(3.0, 12.0), (w + dw).clamp(3.0, 12.0));
            prop_assert!(c.power_at(a) <= c.power_at(b));
            if (12.0..=25.0).contains(&w) {
                prop_assert_eq!(p, c.rated_power());
            }
        }

        #[test]
        fn relative_self_is_zero(total in 1e-3..1e12f64, points in 1usize..20_000, steps in 1usize..20_000) {
            let s = PowerSummary {
                total_energy: total,
                per_point_mean_power: total / (points * steps) as f64 / 6.0,
                n_points: points,
                n_steps: steps,
                step_hours: 6.0,
                n_missing: 0,
            };
            prop_assert_eq!(relative_power(&s, &s).unwrap(), 0.0);
        }
    }
}
