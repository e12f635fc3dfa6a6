//! Box-percentile plots of replicated estimates.
//!
//! A box-percentile glyph draws, at the height of each quantile value, a
//! horizontal extent proportional to `min(q, 1 - q)`: widest at the median,
//! pinched to a point at the extremes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::error::{CbError, Result};
use crate::sim::{quantile_sorted, sorted_copy};

#[derive(Debug, Clone, PartialEq)]
pub struct QuantilePolygon {
    pub parameter_name: String,
    pub quantile_levels: Vec<f64>,
    pub quantile_values: Vec<f64>,
    pub median: f64,
}

impl QuantilePolygon {
    /// Relative half-width of the glyph at `level`, 1 at the median.
    pub fn width_at(level: f64) -> f64 {
        2.0 * level.min(1.0 - level)
    }

    pub fn value_range(&self) -> (f64, f64) {
        (
            self.quantile_values[0],
            *self.quantile_values.last().expect("non-empty"),
        )
    }

    /// `level,value` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,value\n");
        for (level, value) in self.quantile_levels.iter().zip(&self.quantile_values) {
            let _ = writeln!(out, "{level},{value}");
        }
        out
    }
}

/// Quantiles of `estimates` at `resolution` evenly spaced levels `i / (resolution - 1)`.
///
/// When `resolution` is even the grid misses 0.5, so the median level is
/// inserted as well.
pub fn build_quantile_polygon(
    parameter_name: &str,
    estimates: &[f64],
    resolution: usize,
) -> Result<QuantilePolygon> {
    if estimates.is_empty() {
        return Err(CbError::Empty("no estimates to plot"));
    }
    if resolution < 3 {
        return Err(CbError::Config(format!(
            "polygon resolution {resolution} is below the minimum of 3"
        )));
    }
    let sorted = sorted_copy(estimates);
    let last = (resolution - 1) as f64;
    let mut levels: Vec<f64> = (0..resolution).map(|i| i as f64 / last).collect();
    if resolution.is_multiple_of(2) {
        let at = levels.partition_point(|&l| l < 0.5);
        levels.insert(at, 0.5);
    }
    let values: Vec<f64> = levels.iter().map(|&l| quantile_sorted(&sorted, l)).collect();
    Ok(QuantilePolygon {
        parameter_name: parameter_name.to_string(),
        median: quantile_sorted(&sorted, 0.5),
        quantile_levels: levels,
        quantile_values: values,
    })
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

fn to_y(value: f64) -> f64 {
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    MARGIN_TOP + (1.0 - value.clamp(0.0, 1.0)) * plot_h
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Polygon outline: right side bottom to top, then left side top to bottom.
fn glyph_points(polygon: &QuantilePolygon, center: f64, half_width: f64) -> String {
    let right = polygon
        .quantile_levels
        .iter()
        .zip(&polygon.quantile_values)
        .map(|(&q, &v)| (center + half_width * QuantilePolygon::width_at(q), to_y(v)));
    let left = polygon
        .quantile_levels
        .iter()
        .zip(&polygon.quantile_values)
        .rev()
        .map(|(&q, &v)| (center - half_width * QuantilePolygon::width_at(q), to_y(v)));
    right
        .chain(left)
        .map(|(x, y)| format!("{x:.3},{y:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// SVG document with one glyph per polygon on a shared [0, 1] value axis.
pub fn svg_document(polygons: &[QuantilePolygon]) -> Result<String> {
    if polygons.is_empty() {
        return Err(CbError::Empty("no polygons to render"));
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let slot = plot_w / polygons.len() as f64;
    let half_width = slot * 0.35;
    let axis_x = MARGIN_LEFT;
    let y_top = to_y(1.0);
    let y_bottom = to_y(0.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line class="axis" x1="{axis_x}" y1="{y_top:.3}" x2="{axis_x}" y2="{y_bottom:.3}" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let v = i as f64 / TICKS as f64;
        let y = to_y(v);
        let _ = writeln!(
            svg,
            r#"<line class="tick" x1="{:.3}" y1="{y:.3}" x2="{axis_x}" y2="{y:.3}" stroke="black"/>"#,
            axis_x - 5.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.3}" y="{:.3}" font-size="12" text-anchor="end">{v:.1}</text>"#,
            axis_x - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{:.3}" font-size="13" text-anchor="middle" transform="rotate(-90 15 {:.3})">estimate</text>"#,
        (y_top + y_bottom) / 2.0,
        (y_top + y_bottom) / 2.0
    );

    for (i, polygon) in polygons.iter().enumerate() {
        let center = MARGIN_LEFT + slot * (i as f64 + 0.5);
        let name = escape(&polygon.parameter_name);
        let (lo, hi) = polygon.value_range();
        if lo == hi {
            // Zero spread collapses the glyph to its median line.
            let y = to_y(lo);
            let _ = writeln!(
                svg,
                r#"<line class="glyph" data-parameter="{name}" x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="black" stroke-width="2"/>"#,
                center - half_width,
                center + half_width
            );
        } else {
            let _ = writeln!(
                svg,
                r#"<polygon class="glyph" data-parameter="{name}" points="{}" fill="lightsteelblue" stroke="black"/>"#,
                glyph_points(polygon, center, half_width)
            );
            let y = to_y(polygon.median);
            let _ = writeln!(
                svg,
                r#"<line class="median" x1="{:.3}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="black"/>"#,
                center - half_width,
                center + half_width
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{center:.3}" y="{:.3}" font-size="13" text-anchor="middle">{name}</text>"#,
            y_bottom + 25.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn render_svg(polygons: &[QuantilePolygon], output_path: &Path) -> io::Result<()> {
    let svg = svg_document(polygons).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    fs::write(output_path, svg)
}

/// Writes `boxpercentile.svg` plus `<name>_quantiles.csv` per polygon into
/// `dir`, creating it if needed. Returns the paths written.
pub fn emit_plot(polygons: &[QuantilePolygon], dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let svg_path = dir.join("boxpercentile.svg");
    render_svg(polygons, &svg_path)?;
    let mut written = vec![svg_path];
    for polygon in polygons {
        let path = dir.join(format!("{}_quantiles.csv", polygon.parameter_name));
        fs::write(&path, polygon.to_csv())?;
        written.push(path);
    }
    Ok(written)
}
