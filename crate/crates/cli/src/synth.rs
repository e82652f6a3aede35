//! Synthetic Weibull wind fixtures for demos, tests and benchmarks.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array3};
use rand::{rngs::StdRng, Rng, SeedableRng};
use rand_distr::{Distribution, Weibull};
use serde_json::json;
use windbench_core::grid::write_wgrd;
use windbench_core::{GridSpec, GriddedSeries};

use crate::error::{CliError, Result};

const V126_CSV: &str = include_str!("../../../data/turbines/vestas_v126_3450.csv");
const V126_JSON: &str = include_str!("../../../data/turbines/vestas_v126_3450.json");

/// 2005-01-01T00:00:00Z
pub const FIXTURE_START: i64 = 1_104_537_600;
const SIX_HOURS: i64 = 21_600;

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub id: String,
    /// Weibull shape `k`.
    pub shape: f64,
    /// Weibull scale `λ`, m/s at 10 m.
    pub scale: f64,
    pub n_y: usize,
    pub n_x: usize,
}

#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub seed: u64,
    pub n_steps: usize,
    pub reference: SynthDataset,
    pub candidates: Vec<SynthDataset>,
    /// Adds a land mask on the reference grid marking one corner as sea.
    pub reference_mask: bool,
}

impl Default for FixtureSpec {
    /// One 20×20 reference and three Weibull candidates over 400 six-hour steps.
    fn default() -> Self {
        let ds = |id: &str, shape, scale, n| SynthDataset {
            id: id.to_string(),
            shape,
            scale,
            n_y: n,
            n_x: n,
        };
        FixtureSpec {
            seed: 20_050_101,
            n_steps: 400,
            reference: ds("REF", 2.0, 6.0, 20),
            candidates: vec![
                ds("WB-A", 2.2, 6.5, 20),
                ds("WB-B", 1.8, 5.5, 14),
                ds("WB-C", 2.0, 7.0, 10),
            ],
            reference_mask: true,
        }
    }
}

/// Regular grid over 45–54.5°N, 0–9.5°E at the requested density.
fn fixture_grid(n_y: usize, n_x: usize) -> GridSpec {
    GridSpec::regular(Array1::linspace(45.0, 54.5, n_y), Array1::linspace(0.0, 9.5, n_x)).expect("valid fixture grid")
}

fn synth_uv(ds: &SynthDataset, n_steps: usize, seed: u64) -> Result<(GriddedSeries, GriddedSeries)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = fixture_grid(ds.n_y, ds.n_x);
    let mut u = Array3::zeros((n_steps, ds.n_y, ds.n_x));
    let mut v = Array3::zeros((n_steps, ds.n_y, ds.n_x));
    for j in 0..ds.n_y {
        for i in 0..ds.n_x {
            // mild spatial gradient in the scale parameter
            let local = ds.scale * (1.0 + 0.15 * (j as f64 / ds.n_y as f64 - 0.5));
            let dist = Weibull::new(local, ds.shape)
                .map_err(|e| CliError::Config(format!("Weibull({local}, {}): {e}", ds.shape)))?;
            for t in 0..n_steps {
                let w: f64 = dist.sample(&mut rng);
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                u[[t, j, i]] = w * theta.cos();
                v[[t, j, i]] = w * theta.sin();
            }
        }
    }
    let times: Vec<i64> = (0..n_steps as i64).map(|k| FIXTURE_START + k * SIX_HOURS).collect();
    Ok((
        GriddedSeries::new(grid.clone(), times.clone(), u, "uas", "m/s")?,
        GriddedSeries::new(grid, times, v, "vas", "m/s")?,
    ))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Writes WGRD inputs, turbine curve and `config.json` into `dir`; returns
/// the config path. The run directory is `dir/run`.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_text(&dir.join("vestas_v126_3450.csv"), V126_CSV)?;
    write_text(&dir.join("vestas_v126_3450.json"), V126_JSON)?;

    let mut datasets = Vec::new();
    let all = std::iter::once((&spec.reference, "reference")).chain(spec.candidates.iter().map(|c| (c, "candidate")));
    for (k, (ds, role)) in all.enumerate() {
        let (u, v) = synth_uv(ds, spec.n_steps, spec.seed.wrapping_add(k as u64 * 7_919))?;
        let u_name = format!("{}_uas.wgrd", ds.id);
        let v_name = format!("{}_vas.wgrd", ds.id);
        write_wgrd(&u, dir.join(&u_name))?;
        write_wgrd(&v, dir.join(&v_name))?;
        let mut entry = json!({ "id": ds.id, "u_path": u_name, "v_path": v_name, "role": role });
        if role == "reference" && spec.reference_mask {
            let mut mask = Array3::from_elem((1, ds.n_y, ds.n_x), 1.0);
            for j in 0..ds.n_y.min(3) {
                for i in 0..ds.n_x.min(3) {
                    mask[[0, j, i]] = 0.0;
                }
            }
            let mask = GriddedSeries::new(fixture_grid(ds.n_y, ds.n_x), vec![FIXTURE_START], mask, "landmask", "1")?;
            let name = format!("{}_landmask.wgrd", ds.id);
            write_wgrd(&mask, dir.join(&name))?;
            entry["mask_path"] = json!(name);
        }
        datasets.push(entry);
    }

    let end = FIXTURE_START + spec.n_steps as i64 * SIX_HOURS;
    let config = json!({
        "region": { "lat_min": 25.0, "lat_max": 73.0, "lon_min": -30.0, "lon_max": 42.0 },
        "hub_height_m": 126.0,
        "kde_grid_size": 1024,
        "top_k": 100,
        "turbine_csv": "vestas_v126_3450.csv",
        "time_window": {
            "start": chrono::DateTime::from_timestamp(FIXTURE_START, 0).expect("valid").to_rfc3339(),
            "end": chrono::DateTime::from_timestamp(end, 0).expect("valid").to_rfc3339(),
        },
        "step_hours": 6.0,
        "output_dir": "run",
        "log_base": "base10",
        "datasets": datasets,
    });
    let path = dir.join("config.json");
    write_text(&path, &(serde_json::to_string_pretty(&config)? + "\n"))?;
    Ok(path)
}
