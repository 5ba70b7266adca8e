//! Minimal SVG emission for learning curves: one mean line per series with a
//! translucent mean±std band. Dependency-free, deterministic output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub struct Series {
    pub name: String,
    /// CSS color, e.g. "#1f77b4".
    pub color: String,
    /// (x, mean, lo, hi) per point, x ascending.
    pub points: Vec<(f64, f64, f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const ML: f64 = 60.0; // left margin
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 45.0;

fn fmt(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Write a band plot of all series to `path`.
pub fn write_band_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series],
) -> Result<()> {
    let pts: Vec<&(f64, f64, f64, f64)> = series.iter().flat_map(|s| &s.points).collect();
    if pts.is_empty() {
        return Err(Error::validation("band plot needs at least one point"));
    }
    let x_min = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_max = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y_min = pts.iter().map(|p| p.2).fold(f64::INFINITY, f64::min).min(0.0);
    let y_max = pts.iter().map(|p| p.3).fold(f64::NEG_INFINITY, f64::max);
    let x_span = (x_max - x_min).max(1e-12);
    let y_span = (y_max - y_min).max(1e-12);
    let sx = |x: f64| ML + (x - x_min) / x_span * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y_min) / y_span * (H - MT - MB);

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    )
    .unwrap();
    writeln!(out, "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "  <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>",
        W / 2.0
    )
    .unwrap();
    // Axes.
    writeln!(
        out,
        "  <line x1=\"{ML}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>",
        H - MB,
        W - MR
    )
    .unwrap();
    writeln!(
        out,
        "  <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{}\" stroke=\"black\"/>",
        H - MB
    )
    .unwrap();
    // Axis labels and end ticks.
    writeln!(
        out,
        "  <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">{x_label}</text>",
        (ML + W - MR) / 2.0,
        H - 8.0
    )
    .unwrap();
    writeln!(
        out,
        "  <text x=\"14\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {0})\">{y_label}</text>",
        (MT + H - MB) / 2.0
    )
    .unwrap();
    for (v, x, anchor) in [(x_min, ML, "start"), (x_max, W - MR, "end")] {
        writeln!(
            out,
            "  <text x=\"{x}\" y=\"{}\" text-anchor=\"{anchor}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            H - MB + 16.0,
            fmt(v)
        )
        .unwrap();
    }
    for v in [y_min, y_max] {
        writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>",
            ML - 6.0,
            sy(v) + 4.0,
            fmt(v)
        )
        .unwrap();
    }
    // Bands then lines, so lines stay visible.
    for s in series {
        if s.points.len() < 2 {
            continue;
        }
        let mut d = String::from("M");
        for p in &s.points {
            write!(d, " {:.2},{:.2}", sx(p.0), sy(p.3)).unwrap();
        }
        for p in s.points.iter().rev() {
            write!(d, " {:.2},{:.2}", sx(p.0), sy(p.2)).unwrap();
        }
        writeln!(
            out,
            "  <path d=\"{d} Z\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
            s.color
        )
        .unwrap();
    }
    for s in series {
        let line: Vec<String> = s
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1)))
            .collect();
        writeln!(
            out,
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>",
            line.join(" "),
            s.color
        )
        .unwrap();
    }
    // Legend.
    for (i, s) in series.iter().enumerate() {
        let y = MT + 16.0 * i as f64;
        writeln!(
            out,
            "  <line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{}\" stroke-width=\"2\"/>",
            ML + 10.0,
            ML + 34.0,
            s.color
        )
        .unwrap();
        writeln!(
            out,
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            ML + 40.0,
            y + 4.0,
            s.name
        )
        .unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    fs::write(path, out).map_err(|e| Error::file(path, e.to_string()))
}
