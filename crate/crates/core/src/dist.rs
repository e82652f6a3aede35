//! Wind-speed distributions and the distances used to compare them.
//!
//! Samples are pooled over all selected grid points and time steps and kept
//! sorted, so every statistic here is independent of pooling order.

use log::debug;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{mean, pairwise_sum, pairwise_sum_by};

/// Default number of points on the shared KDE evaluation grid.
pub const DEFAULT_KDE_GRID_SIZE: usize = 1024;
/// Default number of extreme values averaged by [`top_k_mean`].
pub const DEFAULT_TOP_K: usize = 100;
/// Grid headroom past the largest sample, in bandwidths.
const GRID_PAD_BANDWIDTHS: f64 = 3.0;
/// `exp(-z²/2)` is exactly zero in f64 beyond this many bandwidths.
const KERNEL_UNDERFLOW_Z: f64 = 38.7;

/// Pooled wind speeds (m/s), finite and nonnegative, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    source_id: String,
    dropped_nan: usize,
}

impl EmpiricalSample {
    /// Pools `values`, dropping NaNs. Infinite or negative values are rejected.
    pub fn new(source_id: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let source_id = source_id.into();
        let mut dropped_nan = 0;
        let mut kept = Vec::new();
        for v in values {
            if v.is_nan() {
                dropped_nan += 1;
            } else if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "sample {source_id:?} contains invalid wind speed {v}"
                )));
            } else {
                kept.push(v);
            }
        }
        if kept.is_empty() {
            return Err(Error::DegenerateSample(format!("sample {source_id:?} is empty")));
        }
        if dropped_nan > 0 {
            debug!("sample {source_id:?}: dropped {dropped_nan} NaN values");
        }
        kept.sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalSample {
            values: kept,
            source_id,
            dropped_nan,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn dropped_nan(&self) -> usize {
        self.dropped_nan
    }

    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Sample standard deviation (n − 1 denominator).
    pub fn std_dev(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss = pairwise_sum_by(&self.values, &|x| (x - m) * (x - m));
        (ss / (n - 1) as f64).sqrt()
    }
}

/// Uniform, strictly increasing 1-D evaluation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedGrid {
    start: f64,
    step: f64,
    len: usize,
}

impl SpeedGrid {
    pub fn new(start: f64, stop: f64, len: usize) -> Result<Self> {
        if len < 2 || !(stop > start) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "speed grid needs len >= 2 and start < stop, got [{start}, {stop}] x {len}"
            )));
        }
        Ok(SpeedGrid {
            start,
            step: (stop - start) / (len - 1) as f64,
            len,
        })
    }

    /// `[0, max(a, b) + 3·h_max]`, the common support for comparing `a` and `b`.
    pub fn shared(samples: &[&EmpiricalSample], bandwidths: &[f64], len: usize) -> Result<Self> {
        let top = samples.iter().map(|s| s.max()).fold(0.0, f64::max);
        let h_max = bandwidths.iter().copied().fold(0.0, f64::max);
        SpeedGrid::new(0.0, top + GRID_PAD_BANDWIDTHS * h_max, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.at(k)).collect()
    }
}

/// KDE discretized to probability mass per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub grid: SpeedGrid,
    /// Renormalized to sum to 1.
    pub density: Vec<f64>,
    /// Unnormalized KDE values at the grid points.
    pub raw: Vec<f64>,
    pub bandwidth: f64,
}

/// Scott's rule for a 1-D Gaussian kernel: `σ̂ · n^(-1/5)`.
pub fn scott_bandwidth(sample: &EmpiricalSample) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::DegenerateSample(format!("Scott's rule needs n >= 2, got {n}")));
    }
    let sd = sample.std_dev();
    if sd == 0.0 {
        return Err(Error::DegenerateSample(format!(
            "sample {:?} has zero variance",
            sample.source_id()
        )));
    }
    Ok(sd * (n as f64).powf(-0.2))
}

/// Gaussian KDE of `sample` at each point of `grid`.
///
/// Only samples within the kernel's f64 underflow radius of a grid point are
/// summed; the rest contribute exactly zero.
pub fn kde_eval(sample: &EmpiricalSample, grid: &SpeedGrid, h: f64) -> Result<DensityEstimate> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {h}")));
    }
    let xs = sample.values();
    let norm = 1.0 / (xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let reach = KERNEL_UNDERFLOW_Z * h;
    let raw: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let g = grid.at(k);
            let lo = xs.partition_point(|&x| x < g - reach);
            let hi = xs.partition_point(|&x| x <= g + reach);
            let kernel = |&x: &f64| {
                let z = (g - x) / h;
                (-0.5 * z * z).exp()
            };
            norm * pairwise_sum_by(&xs[lo..hi], &kernel)
        })
        .collect();
    let cells: Vec<f64> = raw.iter().map(|r| r * grid.step()).collect();
    let total = pairwise_sum(&cells);
    if !(total > 0.0) {
        return Err(Error::DegenerateSample(format!(
            "KDE of {:?} has no mass on the evaluation grid",
            sample.source_id()
        )));
    }
    Ok(DensityEstimate {
        grid: grid.clone(),
        density: cells.iter().map(|c| c / total).collect(),
        raw,
        bandwidth: h,
    })
}

fn kl_terms(p: &[f64], m: &[f64]) -> Vec<f64> {
    p.iter()
        .zip(m)
        .map(|(&pi, &mi)| if pi > 0.0 { pi * (pi / mi).log2() } else { 0.0 })
        .collect()
}

/// Jensen–Shannon distance with base-2 logarithms, in `[0, 1]`.
pub fn js_distance(p: &DensityEstimate, q: &DensityEstimate) -> Result<f64> {
    if p.grid != q.grid {
        return Err(Error::ShapeMismatch("densities are on different grids".into()));
    }
    js_distance_pmf(&p.density, &q.density)
}

/// Jensen–Shannon distance between two probability vectors on a common support.
pub fn js_distance_pmf(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!(
            "probability vectors differ in length: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    if p.iter().chain(q).any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
    let divergence = 0.5 * pairwise_sum(&kl_terms(p, &m)) + 0.5 * pairwise_sum(&kl_terms(q, &m));
    Ok(divergence.clamp(0.0, 1.0).sqrt())
}

/// Wasserstein-1 distance between two empirical measures on the line.
///
/// Integrates `|F_a(x) − F_b(x)|` across the merged sorted samples; with
/// integer counts this is exact up to the final products and sums.
pub fn w1_distance(a: &EmpiricalSample, b: &EmpiricalSample) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::DegenerateSample("W1 needs nonempty samples".into()));
    }
    let (xa, xb) = (a.values(), b.values());
    let (n, m) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut pieces = Vec::with_capacity(xa.len() + xb.len());
    let mut prev = xa[0].min(xb[0]);
    while i < xa.len() || j < xb.len() {
        let next = match (xa.get(i), xb.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        // CDF gap on [prev, next): counts are integers so i·m − j·n is exact
        let gap = (i as f64 * m - j as f64 * n).abs();
        if next > prev && gap > 0.0 {
            pieces.push(gap * (next - prev));
        }
        while i < xa.len() && xa[i] == next {
            i += 1;
        }
        while j < xb.len() && xb[j] == next {
            j += 1;
        }
        prev = next;
    }
    Ok(pairwise_sum(&pieces) / (n * m))
}

/// Mean of the `k` largest values.
pub fn top_k_mean(sample: &EmpiricalSample, k: usize) -> Result<f64> {
    let n = sample.len();
    if k == 0 || n < k {
        return Err(Error::SampleTooSmall { n, k });
    }
    Ok(mean(&sample.values()[n - k..]))
}
