//! Minimal self-contained SVG plotting for the CSV outputs.
//!
//! Only the two schemas produced by this crate are accepted: curves
//! (`t,value,stderr,n_samples`) and profiles (`t,r,value,stderr`). Profiles
//! draw one polyline per time slice and optionally collapse the x axis to
//! r - v·t.  Everything is written directly as SVG text so output bytes are
//! stable across runs.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 110.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    /// For profile CSVs: plot against r - v·t instead of r.
    pub collapse_v: Option<f64>,
}

impl PlotSpec {
    pub fn linear(title: &str, x_label: &str, y_label: &str) -> Self {
        PlotSpec {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            collapse_v: None,
        }
    }

    pub fn semilog_y(title: &str, x_label: &str, y_label: &str) -> Self {
        PlotSpec { log_y: true, ..Self::linear(title, x_label, y_label) }
    }

    pub fn loglog(title: &str, x_label: &str, y_label: &str) -> Self {
        PlotSpec { log_x: true, log_y: true, ..Self::linear(title, x_label, y_label) }
    }
}

/// (label, points) pairs extracted from one CSV.
type Series = Vec<(String, Vec<(f64, f64)>)>;

fn parse_csv(text: &str, spec: &PlotSpec) -> Result<Series> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Schema("empty CSV".into()))?;
    let header = header.trim();
    let is_curve = header == "t,value,stderr,n_samples";
    let is_profile = header == "t,r,value,stderr";
    if !is_curve && !is_profile {
        return Err(Error::Schema(format!("unrecognized CSV header `{header}`")));
    }
    let mut series: Series = Vec::new();
    // data rows are numbered from 1, excluding the header
    for (idx, line) in lines {
        let row = idx;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Schema(format!("row {row}: non-numeric field in `{line}`")))?;
        let expected = if is_curve { 4 } else { 4 };
        if fields.len() != expected {
            return Err(Error::Schema(format!(
                "row {row}: expected {expected} fields, got {}",
                fields.len()
            )));
        }
        let (label, x, y) = if is_curve {
            ("series".to_string(), fields[0], fields[1])
        } else {
            let t = fields[0];
            let x = match spec.collapse_v {
                Some(v) => fields[1] - v * t,
                None => fields[1],
            };
            (format!("t = {t}"), x, fields[2])
        };
        if spec.log_x && x <= 0.0 {
            return Err(Error::Schema(format!(
                "row {row}: non-positive x value {x} on a log x axis"
            )));
        }
        if spec.log_y && y <= 0.0 {
            return Err(Error::Schema(format!(
                "row {row}: non-positive y value {y} on a log y axis"
            )));
        }
        match series.iter_mut().find(|(l, _)| *l == label) {
            Some((_, pts)) => pts.push((x, y)),
            None => series.push((label, vec![(x, y)])),
        }
    }
    if series.is_empty() || series.iter().all(|(_, p)| p.is_empty()) {
        return Err(Error::Schema("CSV contains no data rows".into()));
    }
    Ok(series)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Render `csv_path` into a standalone SVG file at `out_path`.
pub fn emit_plot(csv_path: &Path, spec: &PlotSpec, out_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)?;
    let svg = render_svg(&text, spec)?;
    std::fs::write(out_path, svg)?;
    Ok(())
}

/// Pure rendering path, used directly by tests.
pub fn render_svg(csv_text: &str, spec: &PlotSpec) -> Result<String> {
    let series = parse_csv(csv_text, spec)?;
    let tx = |v: f64| if spec.log_x { v.log10() } else { v };
    let ty = |v: f64| if spec.log_y { v.log10() } else { v };

    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for (_, pts) in &series {
        for &(x, y) in pts {
            x_min = x_min.min(tx(x));
            x_max = x_max.max(tx(x));
            y_min = y_min.min(ty(y));
            y_max = y_max.max(ty(y));
        }
    }
    if x_max - x_min < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let px = |x: f64| MARGIN_L + (tx(x) - x_min) / (x_max - x_min) * (WIDTH - MARGIN_L - MARGIN_R);
    let py = |y: f64| {
        HEIGHT - MARGIN_B - (ty(y) - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_T - MARGIN_B)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    // axes
    let x0 = MARGIN_L;
    let x1 = WIDTH - MARGIN_R;
    let y0 = HEIGHT - MARGIN_B;
    let y1 = MARGIN_T;
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>"
    );
    let _ = writeln!(
        s,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>"
    );
    // ticks: 5 per axis in transformed coordinates
    for i in 0..5 {
        let frac = i as f64 / 4.0;
        let vx = x_min + frac * (x_max - x_min);
        let sx = x0 + frac * (x1 - x0);
        let label = if spec.log_x { format!("1e{vx:.1}") } else { fmt_tick(vx) };
        let _ = writeln!(
            s,
            "<line x1=\"{sx:.2}\" y1=\"{y0}\" x2=\"{sx:.2}\" y2=\"{:.2}\" stroke=\"black\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{sx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>",
            y0 + 20.0
        );
        let vy = y_min + frac * (y_max - y_min);
        let sy = y0 + frac * (y1 - y0);
        let label = if spec.log_y { format!("1e{vy:.1}") } else { fmt_tick(vy) };
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{sy:.2}\" x2=\"{x0}\" y2=\"{sy:.2}\" stroke=\"black\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{sy:.2}\" text-anchor=\"end\" dominant-baseline=\"middle\">{label}</text>",
            x0 - 8.0
        );
    }
    // labels and title
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        xml_escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        xml_escape(&spec.y_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        (x0 + x1) / 2.0,
        xml_escape(&spec.title)
    );
    // series
    for (si, (label, pts)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let coords: Vec<String> =
            pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            coords.join(" ")
        );
        let ly = MARGIN_T + 14.0 * si as f64;
        let _ = writeln!(
            s,
            "<text x=\"{:.2}\" y=\"{ly:.2}\" fill=\"{color}\">{}</text>",
            x1 + 8.0,
            xml_escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_curve_is_one_polyline_with_two_vertices() {
        let csv = "t,value,stderr,n_samples\n0,1.0,0.1,100\n1,2.0,0.1,100\n";
        let spec = PlotSpec::linear("c", "t", "C");
        let svg = render_svg(csv, &spec).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let pts = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(pts.split_whitespace().count(), 2);
    }

    #[test]
    fn log_scale_rejects_non_positive_naming_row() {
        let csv = "t,value,stderr,n_samples\n0,1.0,0.1,100\n1,0.0,0.1,100\n";
        let err = render_svg(csv, &PlotSpec::semilog_y("c", "t", "C")).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }

    #[test]
    fn schema_mismatch_rejected() {
        let err = render_svg("a,b\n1,2\n", &PlotSpec::linear("c", "x", "y")).unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");
    }

    #[test]
    fn profile_draws_one_polyline_per_time_slice() {
        let csv = "t,r,value,stderr\n1,0,4,0\n1,1,2,0\n2,0,4,0\n2,1,3,0\n";
        let svg = render_svg(csv, &PlotSpec::linear("p", "r", "C")).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("t = 1") && svg.contains("t = 2"));
    }

    #[test]
    fn collapse_shifts_x_coordinates() {
        // two slices identical after shifting by v = 1: (r=1, t=1) and
        // (r=2, t=2) both land at x = 0
        let csv = "t,r,value,stderr\n1,1,4,0\n1,2,2,0\n2,2,4,0\n2,3,2,0\n";
        let mut spec = PlotSpec::linear("p", "r - v t", "C");
        spec.collapse_v = Some(1.0);
        let svg = render_svg(csv, &spec).unwrap();
        let polys: Vec<&str> = svg
            .split("<polyline points=\"")
            .skip(1)
            .map(|p| p.split('"').next().unwrap())
            .collect();
        assert_eq!(polys.len(), 2);
        assert_eq!(polys[0], polys[1], "collapsed slices should superimpose");
    }
}
