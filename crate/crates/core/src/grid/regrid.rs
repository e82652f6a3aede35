//! Bilinear regridding from regular or curvilinear source grids.
//!
//! Each target point is mapped once to a four-corner stencil with bilinear
//! weights; the stencil is then applied to every time step. Target points
//! outside the source grid get NaN, as does any point whose stencil touches
//! a NaN source value.

use log::warn;
use ndarray::{Array1, Array2, Array3, Axis};
use rayon::prelude::*;

use super::{GridSpec, GriddedSeries};
use crate::error::Result;

/// Output of [`regrid_bilinear`].
#[derive(Debug, Clone)]
pub struct Regridded {
    pub series: GriddedSeries,
    /// Source cells skipped as zero-area or self-intersecting.
    pub degenerate_cells: usize,
}

/// Corner indices `(j, i)` ordered `[p00, p10, p01, p11]` with local
/// coordinates `s` along the first-to-second corner and `t` along the
/// first-to-third.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    corners: [(usize, usize); 4],
    s: f64,
    t: f64,
}

impl Stencil {
    fn apply(&self, field: &ndarray::ArrayView2<f64>) -> f64 {
        let [v00, v10, v01, v11] = self.corners.map(|c| field[c]);
        if v00.is_nan() || v10.is_nan() || v01.is_nan() || v11.is_nan() {
            return f64::NAN;
        }
        let lower = v00 + self.s * (v10 - v00);
        let upper = v01 + self.s * (v11 - v01);
        let v = lower + self.t * (upper - lower);
        let lo = v00.min(v10).min(v01).min(v11);
        let hi = v00.max(v10).max(v01).max(v11);
        v.clamp(lo, hi)
    }
}

/// Bilinear interpolation of `src` onto `target`, independently per time step.
pub fn regrid_bilinear(src: &GriddedSeries, target: &GridSpec) -> Result<Regridded> {
    let (ty, tx) = target.shape();
    let (stencils, degenerate_cells): (Vec<Option<Stencil>>, usize) = match src.grid() {
        GridSpec::Regular { lat, lon } => {
            let stencils = (0..ty * tx)
                .into_par_iter()
                .map(|k| {
                    let (plat, plon) = target.point(k / tx, k % tx);
                    regular_stencil(lat, lon, plat, plon)
                })
                .collect();
            (stencils, 0)
        }
        GridSpec::Curvilinear { lat, lon } => {
            let locator = QuadLocator::new(lat, lon);
            let stencils = (0..ty * tx)
                .into_par_iter()
                .map(|k| {
                    let (plat, plon) = target.point(k / tx, k % tx);
                    locator.locate(plat, plon)
                })
                .collect();
            (stencils, locator.degenerate)
        }
    };
    if degenerate_cells > 0 {
        warn!("regrid: skipped {degenerate_cells} degenerate source cells");
    }

    let slabs: Vec<Array2<f64>> = src
        .values()
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|field| {
            Array2::from_shape_fn((ty, tx), |(j, i)| {
                stencils[j * tx + i].map_or(f64::NAN, |st| st.apply(&field))
            })
        })
        .collect();
    let mut values = Array3::from_elem((src.n_times(), ty, tx), f64::NAN);
    for (mut out, slab) in values.axis_iter_mut(Axis(0)).zip(slabs) {
        out.assign(&slab);
    }

    let series = GriddedSeries::from_parts(
        target.clone(),
        src.times().to_vec(),
        values,
        src.name().to_string(),
        src.units().to_string(),
        None,
    );
    Ok(Regridded {
        series,
        degenerate_cells,
    })
}

/// Bracketing index and fraction of `x` on a strictly monotonic axis.
fn bracket(axis: &Array1<f64>, x: f64) -> Option<(usize, usize, f64)> {
    let n = axis.len();
    if n == 1 {
        return (axis[0] == x).then_some((0, 0, 0.0));
    }
    let increasing = axis[n - 1] > axis[0];
    let (lo, hi) = if increasing {
        (axis[0], axis[n - 1])
    } else {
        (axis[n - 1], axis[0])
    };
    if !(x >= lo && x <= hi) {
        return None;
    }
    // first index whose value is past x in axis direction
    let past = if increasing {
        axis.as_slice().map_or_else(
            || axis.iter().position(|&a| a > x).unwrap_or(n),
            |s| s.partition_point(|&a| a <= x),
        )
    } else {
        axis.iter().position(|&a| a < x).unwrap_or(n)
    };
    let k = past.clamp(1, n - 1) - 1;
    let frac = ((x - axis[k]) / (axis[k + 1] - axis[k])).clamp(0.0, 1.0);
    Some((k, k + 1, frac))
}

fn regular_stencil(lat: &Array1<f64>, lon: &Array1<f64>, plat: f64, plon: f64) -> Option<Stencil> {
    let (j0, j1, t) = bracket(lat, plat)?;
    let (i0, i1, s) = bracket(lon, plon)?;
    Some(Stencil {
        corners: [(j0, i0), (j0, i1), (j1, i0), (j1, i1)],
        s,
        t,
    })
}

type Pt = (f64, f64);

fn sub(a: Pt, b: Pt) -> Pt {
    (a.0 - b.0, a.1 - b.1)
}

fn cross(a: Pt, b: Pt) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

fn segments_cross(a: Pt, b: Pt, c: Pt, d: Pt) -> bool {
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Source cell as corners in (lon, lat) space, ordered `[p00, p10, p01, p11]`.
#[derive(Debug, Clone, Copy)]
struct Quad {
    j: usize,
    i: usize,
    p: [Pt; 4],
}

impl Quad {
    /// Zero-area or self-intersecting (bow-tie) cells.
    fn is_degenerate(&self) -> bool {
        let [p00, p10, p01, p11] = self.p;
        if self.p.iter().any(|q| !q.0.is_finite() || !q.1.is_finite()) {
            return true;
        }
        // perimeter order p00 -> p10 -> p11 -> p01
        let ring = [p00, p10, p11, p01];
        let area2: f64 = (0..4).map(|k| cross(ring[k], ring[(k + 1) % 4])).sum();
        let scale = ring.iter().flat_map(|q| [q.0.abs(), q.1.abs()]).fold(1.0_f64, f64::max);
        if area2.abs() <= 1e-12 * scale * scale {
            return true;
        }
        segments_cross(p00, p10, p11, p01) || segments_cross(p10, p11, p01, p00)
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        let xs = self.p.map(|q| q.0);
        let ys = self.p.map(|q| q.1);
        (
            xs.iter().copied().fold(f64::INFINITY, f64::min),
            xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ys.iter().copied().fold(f64::INFINITY, f64::min),
            ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    /// Solves `p = p00 + s·e + t·f + s·t·g` for `(s, t)` in the unit square.
    fn inverse(&self, x: Pt) -> Option<(f64, f64)> {
        const EPS: f64 = 1e-9;
        let [p00, p10, p01, p11] = self.p;
        let e = sub(p10, p00);
        let f = sub(p01, p00);
        let g = (p00.0 - p10.0 - p01.0 + p11.0, p00.1 - p10.1 - p01.1 + p11.1);
        let h = sub(x, p00);

        let k2 = cross(g, f);
        let k1 = cross(e, f) + cross(h, g);
        let k0 = cross(h, e);

        let mut roots = [f64::NAN; 2];
        let scale = k1.abs().max(k0.abs()).max(f64::MIN_POSITIVE);
        if k2.abs() <= 1e-14 * scale {
            if k1 == 0.0 {
                return None;
            }
            roots[0] = -k0 / k1;
        } else {
            let disc = k1 * k1 - 4.0 * k0 * k2;
            if disc < 0.0 {
                return None;
            }
            let q = -0.5 * (k1 + k1.signum() * disc.sqrt());
            roots[0] = q / k2;
            if q != 0.0 {
                roots[1] = k0 / q;
            }
        }

        for t in roots.into_iter().filter(|t| t.is_finite()) {
            if !(-EPS..=1.0 + EPS).contains(&t) {
                continue;
            }
            let dx = e.0 + g.0 * t;
            let dy = e.1 + g.1 * t;
            let s = if dx.abs() >= dy.abs() {
                (h.0 - f.0 * t) / dx
            } else {
                (h.1 - f.1 * t) / dy
            };
            if s.is_finite() && (-EPS..=1.0 + EPS).contains(&s) {
                return Some((s.clamp(0.0, 1.0), t.clamp(0.0, 1.0)));
            }
        }
        None
    }
}

/// Uniform bucket index over cell bounding boxes.
struct QuadLocator {
    quads: Vec<Quad>,
    buckets: Vec<Vec<u32>>,
    nbx: usize,
    nby: usize,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    degenerate: usize,
}

impl QuadLocator {
    fn new(lat: &Array2<f64>, lon: &Array2<f64>) -> Self {
        let (ny, nx) = lat.dim();
        let mut quads = Vec::new();
        let mut degenerate = 0;
        for j in 0..ny.saturating_sub(1) {
            for i in 0..nx.saturating_sub(1) {
                let pt = |jj: usize, ii: usize| (lon[[jj, ii]], lat[[jj, ii]]);
                let quad = Quad {
                    j,
                    i,
                    p: [pt(j, i), pt(j, i + 1), pt(j + 1, i), pt(j + 1, i + 1)],
                };
                if quad.is_degenerate() {
                    degenerate += 1;
                } else {
                    quads.push(quad);
                }
            }
        }

        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for q in &quads {
            let (a, b, c, d) = q.bbox();
            x0 = x0.min(a);
            x1 = x1.max(b);
            y0 = y0.min(c);
            y1 = y1.max(d);
        }
        let side = ((quads.len() as f64).sqrt().ceil() as usize).max(1);
        let (nbx, nby) = (side, side);
        let dx = ((x1 - x0) / nbx as f64).max(f64::MIN_POSITIVE);
        let dy = ((y1 - y0) / nby as f64).max(f64::MIN_POSITIVE);
        let mut locator = QuadLocator {
            quads: Vec::new(),
            buckets: vec![Vec::new(); nbx * nby],
            nbx,
            nby,
            x0,
            y0,
            dx,
            dy,
            degenerate,
        };
        for (k, q) in quads.iter().enumerate() {
            let (a, b, c, d) = q.bbox();
            let (bx0, by0) = locator.bucket_of(a, c);
            let (bx1, by1) = locator.bucket_of(b, d);
            for by in by0..=by1 {
                for bx in bx0..=bx1 {
                    locator.buckets[by * nbx + bx].push(k as u32);
                }
            }
        }
        locator.quads = quads;
        locator
    }

    fn bucket_of(&self, x: f64, y: f64) -> (usize, usize) {
        let bx = ((x - self.x0) / self.dx).floor().clamp(0.0, (self.nbx - 1) as f64) as usize;
        let by = ((y - self.y0) / self.dy).floor().clamp(0.0, (self.nby - 1) as f64) as usize;
        (bx, by)
    }

    fn locate(&self, lat: f64, lon: f64) -> Option<Stencil> {
        if self.quads.is_empty() {
            return None;
        }
        let (bx, by) = self.bucket_of(lon, lat);
        self.buckets[by * self.nbx + bx].iter().find_map(|&k| {
            let q = &self.quads[k as usize];
            let (a, b, c, d) = q.bbox();
            if lon < a || lon > b || lat < c || lat > d {
                return None;
            }
            q.inverse((lon, lat)).map(|(s, t)| Stencil {
                corners: [(q.j, q.i), (q.j, q.i + 1), (q.j + 1, q.i), (q.j + 1, q.i + 1)],
                s,
                t,
            })
        })
    }
}
