//! Input builders shared by the benchmarks.

use ndarray::{Array1, Array3};
use windbench_core::{EmpiricalSample, GridSpec, GriddedSeries};

/// Deterministic Weibull-like speeds from a simple LCG, so benches need no RNG crate.
pub fn speeds(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(6_364_136_223_846_793_005).wrapping_add(1);
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6_364_136_223_846_793_005)
                .wrapping_add(1_442_695_040_888_963_407);
            let u = ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
            7.0 * (-u.ln()).sqrt()
        })
        .collect()
}

pub fn sample(n: usize, seed: u64) -> EmpiricalSample {
    EmpiricalSample::new(format!("s{seed}"), speeds(n, seed)).expect("finite speeds")
}

/// Regular `n × n` series over a 10° box with `n_t` steps.
pub fn series(n: usize, n_t: usize) -> GriddedSeries {
    let grid = GridSpec::regular(Array1::linspace(45.0, 55.0, n), Array1::linspace(0.0, 10.0, n)).expect("valid grid");
    let values = Array3::from_shape_vec((n_t, n, n), speeds(n_t * n * n, 3)).expect("shape");
    let times = (0..n_t as i64).map(|k| k * 21_600).collect();
    GriddedSeries::new(grid, times, values, "w", "m/s").expect("valid series")
}

pub fn target_grid(n: usize) -> GridSpec {
    GridSpec::regular(Array1::linspace(45.5, 54.5, n), Array1::linspace(0.5, 9.5, n)).expect("valid grid")
}
