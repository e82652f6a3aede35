//! Self-contained SVG charts rendered from a completed run directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::tables::{self, fmt_num, read_column_strings, NumericTable};

pub const KDE_SVG: &str = "kde.svg";
pub const RESOLUTION_SVG: &str = "resolution.svg";
pub const POWER_SVG: &str = "relative_power.svg";

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Shortest decimal for coordinates; keeps files small and stable.
fn c(x: f64) -> String {
    format!("{:.2}", x)
}

struct Svg {
    width: f64,
    height: f64,
    body: String,
}

impl Svg {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut svg = Svg {
            width,
            height,
            body: String::new(),
        };
        svg.text(width / 2.0, 24.0, title, "title", "middle");
        svg
    }

    fn text(&mut self, x: f64, y: f64, content: &str, class: &str, anchor: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{}" y="{}" class="{}" text-anchor="{}">{}</text>"#,
            c(x),
            c(y),
            class,
            anchor,
            escape(content)
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}"/>"#,
            c(x1),
            c(y1),
            c(x2),
            c(y2),
            stroke
        );
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, label: &str) {
        let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{},{}", c(*x), c(*y))).collect();
        let _ = writeln!(
            self.body,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" data-id="{}" points="{}"/>"#,
            stroke,
            escape(label),
            coords.join(" ")
        );
    }

    fn circle(&mut self, x: f64, y: f64, fill: &str, label: &str) {
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="4" fill="{}" data-id="{}"/>"#,
            c(x),
            c(y),
            fill,
            escape(label)
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str, label: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" data-id="{}"/>"#,
            c(x),
            c(y),
            c(w),
            c(h),
            fill,
            escape(label)
        );
    }

    fn finish(self) -> String {
        format!(
            concat!(
                r#"<?xml version="1.0" encoding="UTF-8"?>"#,
                "\n",
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
                "\n<style>text {{ font-family: sans-serif; font-size: 11px; }} .title {{ font-size: 14px; }}</style>\n",
                r#"<rect width="100%" height="100%" fill="white"/>"#,
                "\n{body}</svg>\n"
            ),
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

/// Linear map from data range to pixel range.
#[derive(Clone, Copy)]
struct Scale {
    d0: f64,
    d1: f64,
    p0: f64,
    p1: f64,
}

impl Scale {
    fn new(d0: f64, d1: f64, p0: f64, p1: f64) -> Self {
        let (d0, d1) = if d1 > d0 { (d0, d1) } else { (d0 - 0.5, d0 + 0.5) };
        Scale { d0, d1, p0, p1 }
    }

    fn of(&self, v: f64) -> f64 {
        self.p0 + (v - self.d0) / (self.d1 - self.d0) * (self.p1 - self.p0)
    }
}

fn frame(svg: &mut Svg, x: Scale, y: Scale, x_label: &str, y_label: &str) {
    svg.line(x.p0, y.p0, x.p1, y.p0, "black");
    svg.line(x.p0, y.p0, x.p0, y.p1, "black");
    svg.text(x.p0, y.p0 + 14.0, &fmt_num(x.d0), "tick", "middle");
    svg.text(x.p1, y.p0 + 14.0, &fmt_num(x.d1), "tick", "middle");
    svg.text(x.p0 - 4.0, y.p0, &format!("{:.3}", y.d0), "tick", "end");
    svg.text(x.p0 - 4.0, y.p1 + 4.0, &format!("{:.3}", y.d1), "tick", "end");
    svg.text((x.p0 + x.p1) / 2.0, y.p0 + 30.0, x_label, "axis", "middle");
    svg.text(x.p0, y.p1 - 8.0, y_label, "axis", "start");
}

fn require(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if !p.is_file() {
        return Err(CliError::Runtime(format!(
            "{} is not a completed run: missing {name}",
            dir.display()
        )));
    }
    Ok(p)
}

fn kde_chart(kde: &NumericTable) -> Result<String> {
    let speeds: Vec<f64> = kde
        .rows
        .iter()
        .map(|(s, _)| {
            s.parse::<f64>()
                .map_err(|_| CliError::Runtime(format!("bad speed {s:?} in kde.csv")))
        })
        .collect::<Result<_>>()?;
    let y_max = kde
        .rows
        .iter()
        .flat_map(|(_, v)| v.iter().flatten().copied())
        .fold(0.0, f64::max);
    let x = Scale::new(0.0, speeds.last().copied().unwrap_or(1.0), 60.0, 620.0);
    let y = Scale::new(0.0, y_max, 380.0, 50.0);
    let mut svg = Svg::new(680.0, 420.0, "Wind-speed density at hub height");
    frame(&mut svg, x, y, "wind speed (m/s)", "density");
    for (k, id) in kde.columns.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = speeds
            .iter()
            .zip(&kde.rows)
            .filter_map(|(s, (_, v))| v[k].map(|d| (x.of(*s), y.of(d))))
            .collect();
        svg.polyline(&pts, color, id);
        let ly = 60.0 + 14.0 * k as f64;
        svg.line(500.0, ly - 4.0, 520.0, ly - 4.0, color);
        svg.text(524.0, ly, id, "legend", "start");
    }
    Ok(svg.finish())
}

fn resolution_chart(metrics: &NumericTable, points: &NumericTable, regression: &NumericTable, log10: bool) -> String {
    let point_col = points.column("points").unwrap_or(0);
    let lookup = |id: &str| {
        points
            .rows
            .iter()
            .find(|(pid, _)| pid == id)
            .and_then(|(_, v)| v.get(point_col).copied().flatten())
    };
    let log = |r: f64| if log10 { r.log10() } else { r.ln() };
    let panels = metrics.columns.len().max(1);
    let cols = 2;
    let rows = panels.div_ceil(cols);
    let (pw, ph) = (340.0, 260.0);
    let mut svg = Svg::new(
        pw * cols as f64,
        ph * rows as f64 + 40.0,
        "Metrics versus log spatial resolution",
    );
    for (m, name) in metrics.columns.iter().enumerate() {
        let ox = pw * (m % cols) as f64;
        let oy = 40.0 + ph * (m / cols) as f64;
        let pts: Vec<(String, f64, f64)> = metrics
            .rows
            .iter()
            .filter_map(|(id, v)| Some((id.clone(), log(lookup(id)?), v[m]?)))
            .collect();
        let (x0, x1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
        let (y0, y1) = pts
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.2), a.1.max(p.2)));
        if pts.is_empty() {
            svg.text(
                ox + pw / 2.0,
                oy + ph / 2.0,
                &format!("{name}: no data"),
                "note",
                "middle",
            );
            continue;
        }
        let pad = |a: f64, b: f64| ((b - a) * 0.05).max(1e-9);
        let x = Scale::new(x0 - pad(x0, x1), x1 + pad(x0, x1), ox + 60.0, ox + pw - 20.0);
        let y = Scale::new(y0 - pad(y0, y1), y1 + pad(y0, y1), oy + ph - 50.0, oy + 20.0);
        frame(&mut svg, x, y, if log10 { "log10(points)" } else { "ln(points)" }, name);
        for (id, px, py) in &pts {
            svg.circle(x.of(*px), y.of(*py), PALETTE[0], id);
        }
        let fit = regression
            .rows
            .iter()
            .find(|(metric, _)| metric == name)
            .and_then(|(_, v)| {
                let ic = regression.column("intercept")?;
                let sc = regression.column("slope")?;
                Some((v[ic]?, v[sc]?))
            });
        if let Some((a, b)) = fit {
            svg.line(
                x.of(x.d0),
                y.of(a + b * x.d0),
                x.of(x.d1),
                y.of(a + b * x.d1),
                PALETTE[1],
            );
        }
    }
    svg.finish()
}

fn power_chart(ids: &[String], labels: &[String], values: &[f64], reference: Option<&str>) -> String {
    let bars: Vec<usize> = (0..ids.len()).filter(|&k| Some(ids[k].as_str()) != reference).collect();
    let lo = bars.iter().map(|&k| values[k]).fold(0.0, f64::min);
    let hi = bars.iter().map(|&k| values[k]).fold(0.0, f64::max);
    let width = 120.0 + 70.0 * bars.len().max(1) as f64;
    let y = Scale::new(lo, hi, 330.0, 60.0);
    let mut svg = Svg::new(width, 380.0, "Relative cumulative power vs reference (%)");
    let zero = y.of(0.0);
    svg.line(50.0, zero, width - 20.0, zero, "black");
    for (slot, &k) in bars.iter().enumerate() {
        let x = 70.0 + 70.0 * slot as f64;
        let top = y.of(values[k]);
        let (ry, rh) = if top < zero {
            (top, zero - top)
        } else {
            (zero, top - zero)
        };
        let color = if values[k] >= 0.0 { PALETTE[0] } else { PALETTE[1] };
        svg.rect(x, ry, 40.0, rh.max(0.5), color, &ids[k]);
        let ty = if values[k] >= 0.0 { ry - 4.0 } else { ry + rh + 12.0 };
        svg.text(x + 20.0, ty, &labels[k], "value", "middle");
        svg.text(x + 20.0, 360.0, &ids[k], "label", "middle");
    }
    svg.finish()
}

/// Renders the three charts into `run_dir`; returns their paths.
pub fn cmd_report(run_dir: &Path) -> Result<Vec<PathBuf>> {
    if !run_dir.is_dir() {
        return Err(CliError::Runtime(format!("{} is not a directory", run_dir.display())));
    }
    let kde = NumericTable::read(&require(run_dir, tables::KDE_CSV)?)?;
    let metrics = NumericTable::read(&require(run_dir, tables::METRICS_CSV)?)?;
    let points = NumericTable::read(&require(run_dir, tables::POINTS_CSV)?)?;
    let regression = NumericTable::read(&require(run_dir, tables::REGRESSION_CSV)?)?;
    let power_path = require(run_dir, tables::POWER_CSV)?;
    let power = NumericTable::read(&power_path)?;
    let labels = read_column_strings(&power_path, "relative_power_percent")?;

    let log10 = std::fs::read_to_string(run_dir.join(tables::REGRESSION_JSON))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .is_none_or(|v| v["log_base"] != "natural");

    let js_col = metrics.column("js");
    let reference = metrics
        .rows
        .iter()
        .find(|(_, v)| js_col.is_some_and(|c| v[c].is_none()))
        .map(|(id, _)| id.as_str());

    let rel_col = power
        .column("relative_power_percent")
        .ok_or_else(|| CliError::Runtime("power.csv lacks relative_power_percent".into()))?;
    let ids: Vec<String> = power.rows.iter().map(|(id, _)| id.clone()).collect();
    let values: Vec<f64> = power.rows.iter().map(|(_, v)| v[rel_col].unwrap_or(f64::NAN)).collect();

    let outputs = [
        (KDE_SVG, kde_chart(&kde)?),
        (RESOLUTION_SVG, resolution_chart(&metrics, &points, &regression, log10)),
        (POWER_SVG, power_chart(&ids, &labels, &values, reference)),
    ];
    let mut written = Vec::new();
    for (name, svg) in outputs {
        let path = run_dir.join(name);
        std::fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
