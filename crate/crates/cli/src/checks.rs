//! Numerical self-checks against independent reference implementations.

use ndarray::{Array1, Array2, Array3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use windbench_core::oracle::{naive_kde, transport_w1, F_UPPER_TAIL};
use windbench_core::{
    f_cdf_complement, js_distance_pmf, kde_eval, regrid_bilinear, scott_bandwidth, w1_distance, EmpiricalSample,
    GridSpec, GriddedSeries, SpeedGrid,
};

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn weibull(rng: &mut StdRng, k: f64, lambda: f64) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    lambda * (-u.ln()).powf(1.0 / k)
}

/// Windowed KDE against the direct O(n·m) sum.
pub fn kde_vs_naive(n: usize, grid_len: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| weibull(&mut rng, 2.0, 7.0)).collect();
    let run = || -> windbench_core::Result<f64> {
        let sample = EmpiricalSample::new("kde", xs.iter().copied())?;
        let h = scott_bandwidth(&sample)?;
        let grid = SpeedGrid::shared(&[&sample], &[h], grid_len)?;
        let est = kde_eval(&sample, &grid, h)?;
        let naive = naive_kde(&xs, &grid.points(), h);
        let peak = naive.iter().cloned().fold(0.0, f64::max);
        // Relative to the curve's peak so far-tail zeros do not dominate.
        Ok(est
            .raw
            .iter()
            .zip(&naive)
            .map(|(a, b)| (a - b).abs() / peak)
            .fold(0.0, f64::max))
    };
    match run() {
        Ok(err) => Check::new("kde_vs_naive", err <= 1e-12, format!("n={n}, max rel err {err:.3e}")),
        Err(e) => Check::new("kde_vs_naive", false, e.to_string()),
    }
}

/// Closed-form W1 against min-cost-flow transport on small samples.
pub fn w1_vs_transport(trials: usize, max_len: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let na = rng.gen_range(1..=max_len);
        let nb = rng.gen_range(1..=max_len);
        // Coarse values so ties are common.
        let a: Vec<f64> = (0..na).map(|_| f64::from(rng.gen_range(0..40u32)) * 0.25).collect();
        let b: Vec<f64> = (0..nb).map(|_| f64::from(rng.gen_range(0..40u32)) * 0.25).collect();
        let fast = EmpiricalSample::new("a", a.iter().copied())
            .and_then(|sa| w1_distance(&sa, &EmpiricalSample::new("b", b.iter().copied())?));
        let fast = match fast {
            Ok(v) => v,
            Err(e) => return Check::new("w1_vs_transport", false, e.to_string()),
        };
        let lp = transport_w1(&a, &b);
        worst = worst.max((fast - lp).abs());
    }
    Check::new(
        "w1_vs_transport",
        worst <= 1e-9,
        format!("{trials} pairs, max abs err {worst:.3e}"),
    )
}

/// F-distribution upper tail against high-precision reference values.
pub fn f_tail_table() -> Check {
    let mut worst = 0.0f64;
    for &(f, d1, d2, p) in F_UPPER_TAIL {
        match f_cdf_complement(f, d1, d2) {
            Ok(got) => worst = worst.max(rel_err(got, p)),
            Err(e) => return Check::new("f_tail_table", false, e.to_string()),
        }
    }
    Check::new(
        "f_tail_table",
        worst <= 1e-10,
        format!("{} entries, max rel err {worst:.3e}", F_UPPER_TAIL.len()),
    )
}

/// JS distance between (0.5, 0.5) and (1, 0).
pub fn js_example() -> Check {
    let expected = 0.5579230452841438;
    match js_distance_pmf(&[0.5, 0.5], &[1.0, 0.0]) {
        Ok(got) => Check::new(
            "js_example",
            (got - expected).abs() <= 1e-5,
            format!("got {got:.10}, expected {expected:.10}"),
        ),
        Err(e) => Check::new("js_example", false, e.to_string()),
    }
}

fn regular_axis(rng: &mut StdRng, lo: f64, n: usize) -> Array1<f64> {
    let mut x = lo;
    Array1::from_iter((0..n).map(|_| {
        let v = x;
        x += rng.gen_range(0.2..1.5);
        v
    }))
}

/// Outcome of one regridding trial: max error on a constant field and on a
/// field bilinear in (lat, lon), and the largest overshoot of a random field
/// outside its source range.
fn regrid_trial(rng: &mut StdRng) -> windbench_core::Result<(f64, f64)> {
    let (ny, nx) = (rng.gen_range(3..9), rng.gen_range(3..9));
    let lat = regular_axis(rng, 40.0, ny);
    let lon = regular_axis(rng, -5.0, nx);
    let curvilinear = rng.gen_bool(0.5);
    // A sheared grid stays exact for affine fields under inverse bilinear mapping.
    let shear = if curvilinear { rng.gen_range(-0.3..0.3) } else { 0.0 };
    let lat2 = Array2::from_shape_fn((ny, nx), |(j, i)| lat[j] + shear * (lon[i] - lon[0]));
    let lon2 = Array2::from_shape_fn((ny, nx), |(_, i)| lon[i]);
    let src_grid = if curvilinear {
        GridSpec::curvilinear(lat2.clone(), lon2.clone())?
    } else {
        GridSpec::regular(lat.clone(), lon.clone())?
    };

    let (a, b, c) = (
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    );
    // The cross term is only reproduced when the cells are axis-aligned.
    let d = if curvilinear { 0.0 } else { rng.gen_range(-0.1..0.1) };
    let exact = |y: f64, x: f64| a + b * y + c * x + d * y * x;
    let smooth = Array3::from_shape_fn((1, ny, nx), |(_, j, i)| exact(lat2[[j, i]], lon2[[j, i]]));
    let noise = Array3::from_shape_fn((1, ny, nx), |_| rng.gen_range(-10.0..10.0));
    let (lo, hi) = noise
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |m, &v| (m.0.min(v), m.1.max(v)));

    // Targets strictly inside the source interior.
    let (tny, tnx) = (rng.gen_range(2..7), rng.gen_range(2..7));
    let lon_lo = lon[0] + 1e-6;
    let lon_hi = lon[nx - 1] - 1e-6;
    let mut tlon: Vec<f64> = (0..tnx).map(|_| rng.gen_range(lon_lo..lon_hi)).collect();
    tlon.sort_by(f64::total_cmp);
    tlon.dedup();
    let max_shift = shear.abs() * (lon[nx - 1] - lon[0]);
    let lat_lo = lat[0] + max_shift + 1e-6;
    let lat_hi = lat[ny - 1] - max_shift - 1e-6;
    if lat_lo >= lat_hi {
        return Ok((0.0, 0.0));
    }
    let mut tlat: Vec<f64> = (0..tny).map(|_| rng.gen_range(lat_lo..lat_hi)).collect();
    tlat.sort_by(f64::total_cmp);
    tlat.dedup();
    let target = GridSpec::regular(Array1::from(tlat.clone()), Array1::from(tlon.clone()))?;

    let mut err = 0.0f64;
    let constant = Array3::from_elem((1, ny, nx), a);
    for (field, is_const) in [(smooth, false), (constant, true)] {
        let src = GriddedSeries::new(src_grid.clone(), vec![0], field, "f", "1")?;
        let out = regrid_bilinear(&src, &target)?.series;
        for (j, &y) in tlat.iter().enumerate() {
            for (i, &x) in tlon.iter().enumerate() {
                let v = out.values()[[0, j, i]];
                let want = if is_const { a } else { exact(y, x) };
                err = err.max(if v.is_nan() { f64::INFINITY } else { (v - want).abs() });
            }
        }
    }

    let src = GriddedSeries::new(src_grid, vec![0], noise, "f", "1")?;
    let out = regrid_bilinear(&src, &target)?.series;
    let overshoot = out
        .values()
        .iter()
        .map(|&v| {
            if v.is_nan() {
                f64::INFINITY
            } else {
                (lo - v).max(v - hi).max(0.0)
            }
        })
        .fold(0.0, f64::max);
    Ok((err, overshoot))
}

/// Bilinear regridding reproduces constant and bilinear fields and never
/// leaves the corner range.
pub fn regrid_exactness(trials: usize, seed: u64) -> Check {
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut err, mut overshoot) = (0.0f64, 0.0f64);
    for _ in 0..trials {
        match regrid_trial(&mut rng) {
            Ok((e, o)) => {
                err = err.max(e);
                overshoot = overshoot.max(o);
            }
            Err(e) => return Check::new("regrid_exactness", false, e.to_string()),
        }
    }
    Check::new(
        "regrid_exactness",
        err <= 1e-10 && overshoot == 0.0,
        format!("{trials} fields, exact-field max err {err:.3e}, overshoot {overshoot:.3e}"),
    )
}

/// The quick battery run by `selftest`.
pub fn run_all() -> Vec<Check> {
    vec![
        kde_vs_naive(1000, 1024, 1),
        w1_vs_transport(500, 8, 2),
        f_tail_table(),
        js_example(),
        regrid_exactness(500, 3),
    ]
}
