//! WGRD: the little-endian binary grid container.
//!
//! ```text
//! "WGRD" | u16 version=1 | u8 grid_kind | u8 reserved=0
//! u32 n_t | u32 n_y | u32 n_x
//! i64 times[n_t]
//! regular:     f64 lat[n_y], f64 lon[n_x]
//! curvilinear: f64 lat[n_y*n_x], f64 lon[n_y*n_x]
//! u16 n_vars, then per variable:
//!   u8 name_len, name, u8 unit_len, unit, f32 data[n_t*n_y*n_x]
//! ```
//!
//! Coordinates are f64 and values f32; in memory values are widened to f64.

use std::path::Path;

use ndarray::{Array1, Array2, Array3, Axis};

use super::{normalize_lon, GridSpec, GriddedSeries};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"WGRD";
const VERSION: u16 = 1;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail<T>(&self, reason: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            offset: self.pos as u64,
            reason: reason.into(),
        })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        match self.pos.checked_add(n) {
            Some(end) if end <= self.buf.len() => {
                let out = &self.buf[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            _ => self.fail(format!(
                "truncated: need {n} bytes for {what}, {} available",
                self.buf.len() - self.pos
            )),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    /// Checks that `count` items of `width` bytes are present before allocating.
    fn reserve(&self, count: usize, width: usize, what: &str) -> Result<usize> {
        match count.checked_mul(width) {
            Some(bytes) if bytes <= self.buf.len() - self.pos => Ok(bytes),
            Some(bytes) => self.fail(format!(
                "truncated: {what} needs {bytes} bytes, {} available",
                self.buf.len() - self.pos
            )),
            None => self.fail(format!("dimension overflow: {count} x {width} bytes for {what}")),
        }
    }

    fn f64s(&mut self, count: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = self.reserve(count, 8, what)?;
        Ok(self
            .take(bytes, what)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn ascii(&mut self, what: &str) -> Result<String> {
        let len = self.u8(what)? as usize;
        let start = self.pos;
        let raw = self.take(len, what)?;
        if !raw.is_ascii() {
            return Err(Error::Parse {
                offset: start as u64,
                reason: format!("{what} is not ASCII"),
            });
        }
        Ok(String::from_utf8(raw.to_vec()).expect("ascii is utf-8"))
    }
}

/// Decodes every variable in a WGRD buffer.
pub fn decode_wgrd(buf: &[u8]) -> Result<Vec<GriddedSeries>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        r.pos = 0;
        return r.fail("bad magic, expected \"WGRD\"");
    }
    let version = r.u16("version")?;
    if version != VERSION {
        r.pos -= 2;
        return r.fail(format!("unsupported version {version}"));
    }
    let kind = r.u8("grid_kind")?;
    if kind > 1 {
        r.pos -= 1;
        return r.fail(format!("unknown grid_kind {kind}"));
    }
    let reserved = r.u8("reserved")?;
    if reserved != 0 {
        r.pos -= 1;
        return r.fail(format!("reserved byte is {reserved}, expected 0"));
    }
    let n_t = r.u32("n_t")? as usize;
    let n_y = r.u32("n_y")? as usize;
    let n_x = r.u32("n_x")? as usize;

    let times_at = r.pos;
    let bytes = r.reserve(n_t, 8, "times")?;
    let times: Vec<i64> = r
        .take(bytes, "times")?
        .chunks_exact(8)
        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(k) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::Parse {
            offset: (times_at + 8 * (k + 1)) as u64,
            reason: "times not strictly increasing".into(),
        });
    }

    let coords_at = r.pos;
    let n_points = n_y.checked_mul(n_x).ok_or_else(|| Error::Parse {
        offset: coords_at as u64,
        reason: format!("dimension overflow: {n_y} x {n_x}"),
    })?;
    let (grid, roll) = if kind == 0 {
        let lat = r.f64s(n_y, "latitudes")?;
        let lon = r.f64s(n_x, "longitudes")?;
        regular_grid(lat, lon).map_err(|e| Error::Parse {
            offset: coords_at as u64,
            reason: e.to_string(),
        })?
    } else {
        let lat = r.f64s(n_points, "latitudes")?;
        let lon = r.f64s(n_points, "longitudes")?;
        let grid = GridSpec::curvilinear(
            Array2::from_shape_vec((n_y, n_x), lat).expect("length checked"),
            Array2::from_shape_vec((n_y, n_x), lon).expect("length checked"),
        )
        .map_err(|e| Error::Parse {
            offset: coords_at as u64,
            reason: e.to_string(),
        })?;
        (grid, 0)
    };

    let n_vars = r.u16("n_vars")? as usize;
    let n_values = n_t.checked_mul(n_points).ok_or_else(|| Error::Parse {
        offset: r.pos as u64,
        reason: format!("dimension overflow: {n_t} x {n_points} values"),
    })?;
    let mut out = Vec::with_capacity(n_vars);
    for _ in 0..n_vars {
        let name = r.ascii("variable name")?;
        let units = r.ascii("unit string")?;
        let bytes = r.reserve(n_values, 4, "variable data")?;
        let data: Vec<f64> = r
            .take(bytes, "variable data")?
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
            .collect();
        let mut values = Array3::from_shape_vec((n_t, n_y, n_x), data).expect("length checked");
        if roll > 0 {
            roll_lon(&mut values, roll);
        }
        out.push(GriddedSeries::from_parts(
            grid.clone(),
            times.clone(),
            values,
            name,
            units,
            None,
        ));
    }
    if r.pos != buf.len() {
        return r.fail(format!("{} trailing bytes", buf.len() - r.pos));
    }
    Ok(out)
}

/// Normalizes longitudes; if that wraps the axis (0..360 input), rotates
/// it so it increases again. Returns the rotation applied to the x axis.
fn regular_grid(lat: Vec<f64>, lon: Vec<f64>) -> Result<(GridSpec, usize)> {
    let normalized: Vec<f64> = lon.iter().copied().map(normalize_lon).collect();
    let drops: Vec<usize> = normalized
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0])
        .map(|(k, _)| k + 1)
        .collect();
    let roll = match drops.as_slice() {
        [k] if lon.windows(2).all(|w| w[1] > w[0]) && normalized[normalized.len() - 1] < normalized[0] => *k,
        _ => 0,
    };
    let mut rotated = normalized;
    rotated.rotate_left(roll);
    let grid = GridSpec::regular(Array1::from(lat), Array1::from(rotated))?;
    Ok((grid, roll))
}

fn roll_lon(values: &mut Array3<f64>, roll: usize) {
    for mut row in values.lanes_mut(Axis(2)) {
        let mut v = row.to_vec();
        v.rotate_left(roll);
        row.assign(&Array1::from(v));
    }
}

/// Encodes series sharing one grid and time axis into a WGRD buffer.
pub fn encode_wgrd(vars: &[GriddedSeries]) -> Result<Vec<u8>> {
    let first = vars
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot encode zero variables".into()))?;
    for v in &vars[1..] {
        if v.grid() != first.grid() || v.times() != first.times() {
            return Err(Error::ShapeMismatch(format!(
                "variable {:?} is on a different grid or time axis than {:?}",
                v.name(),
                first.name()
            )));
        }
    }
    let (n_y, n_x) = first.grid().shape();
    let dim = |n: usize, what: &str| {
        u32::try_from(n).map_err(|_| Error::InvalidParameter(format!("{what} = {n} exceeds u32")))
    };
    let n_vars = u16::try_from(vars.len())
        .map_err(|_| Error::InvalidParameter(format!("{} variables exceed u16", vars.len())))?;

    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(match first.grid() {
        GridSpec::Regular { .. } => 0,
        GridSpec::Curvilinear { .. } => 1,
    });
    buf.push(0);
    buf.extend_from_slice(&dim(first.n_times(), "n_t")?.to_le_bytes());
    buf.extend_from_slice(&dim(n_y, "n_y")?.to_le_bytes());
    buf.extend_from_slice(&dim(n_x, "n_x")?.to_le_bytes());
    for t in first.times() {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    let coords: Box<dyn Iterator<Item = &f64>> = match first.grid() {
        GridSpec::Regular { lat, lon } => Box::new(lat.iter().chain(lon.iter())),
        GridSpec::Curvilinear { lat, lon } => Box::new(lat.iter().chain(lon.iter())),
    };
    for c in coords {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    buf.extend_from_slice(&n_vars.to_le_bytes());
    for v in vars {
        for (label, text) in [("name", v.name()), ("unit", v.units())] {
            if !text.is_ascii() || text.len() > u8::MAX as usize {
                return Err(Error::InvalidParameter(format!(
                    "variable {label} {text:?} must be ASCII and at most 255 bytes"
                )));
            }
            buf.push(text.len() as u8);
            buf.extend_from_slice(text.as_bytes());
        }
        for &x in v.values().iter() {
            let x = if x.is_nan() { f32::NAN } else { x as f32 };
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(buf)
}

pub fn read_wgrd_all(path: impl AsRef<Path>) -> Result<Vec<GriddedSeries>> {
    let path = path.as_ref();
    let buf = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wgrd(&buf)
}

/// Reads the first variable of a WGRD file.
pub fn read_wgrd(path: impl AsRef<Path>) -> Result<GriddedSeries> {
    read_wgrd_all(path)?.into_iter().next().ok_or_else(|| Error::Parse {
        offset: 0,
        reason: "file contains no variables".into(),
    })
}

pub fn write_wgrd(series: &GriddedSeries, path: impl AsRef<Path>) -> Result<()> {
    write_wgrd_all(std::slice::from_ref(series), path)
}

pub fn write_wgrd_all(vars: &[GriddedSeries], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let buf = encode_wgrd(vars)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
