//! Degree-curve plots: a series CSV plus a two-panel SVG (linear and log y).

use std::fmt::Write as _;
use std::path::Path;

use leafdeg::report::fmt_num;

use crate::error::Result;
use crate::io;

const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#111111"];
const PANEL_W: f64 = 420.0;
const PANEL_H: f64 = 300.0;
const MARGIN: f64 = 45.0;

pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Write `<path>` (SVG) and `<path>.csv` (one column per series).
pub fn write_plot(path: &Path, series: &[Series]) -> Result<()> {
    io::write(&path.with_extension("csv"), &series_csv(series))?;
    io::write(path, &svg(series))
}

pub fn series_csv(series: &[Series]) -> String {
    let names: Vec<&str> = series.iter().map(|s| s.name).collect();
    let mut out = format!("degree,{}\n", names.join(","));
    let len = series.iter().map(|s| s.values.len()).max().unwrap_or(0);
    for d in 0..len {
        let row: Vec<String> = series
            .iter()
            .map(|s| s.values.get(d).map(|&v| fmt_num(v)).unwrap_or_default())
            .collect();
        let _ = writeln!(out, "{d},{}", row.join(","));
    }
    out
}

fn panel(out: &mut String, x0: f64, title: &str, series: &[Series], log: bool) {
    let len = series
        .iter()
        .map(|s| s.values.len())
        .max()
        .unwrap_or(1)
        .max(2);
    let transform = |v: f64| if log { v.max(1e-300).log10() } else { v };
    let finite: Vec<f64> = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .filter(|&v| !log || v > 0.0)
        .map(transform)
        .collect();
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = if log {
        finite.iter().copied().fold(f64::INFINITY, f64::min).floor()
    } else {
        0.0
    };
    let (lo, hi) = if hi.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (0.0, 1.0)
    };
    let (w, h) = (PANEL_W - 2.0 * MARGIN, PANEL_H - 2.0 * MARGIN);
    let px = |d: usize| x0 + MARGIN + w * d as f64 / (len - 1) as f64;
    let py = |v: f64| MARGIN + h * (1.0 - (transform(v) - lo) / (hi - lo));

    let _ = writeln!(
        out,
        r##"<rect x="{}" y="{MARGIN}" width="{w}" height="{h}" fill="none" stroke="#888"/>"##,
        x0 + MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="25" text-anchor="middle" font-size="13">{title}</text>"#,
        x0 + PANEL_W / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">degree</text>"#,
        x0 + PANEL_W / 2.0,
        PANEL_H - 8.0
    );
    for d in (0..len).step_by(5) {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{}" text-anchor="middle" font-size="10">{d}</text>"#,
            px(d),
            MARGIN + h + 14.0
        );
    }
    let ticks = [lo, (lo + hi) / 2.0, hi];
    for t in ticks {
        let label = if log {
            format!("1e{t:.1}")
        } else {
            fmt_num((t * 1e3).round() / 1e3)
        };
        let y = MARGIN + h * (1.0 - (t - lo) / (hi - lo));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="10">{label}</text>"#,
            x0 + MARGIN - 4.0,
            y + 3.0
        );
    }
    for (k, s) in series.iter().enumerate() {
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| !log || v > 0.0)
            .map(|(d, &v)| format!("{:.1},{:.1}", px(d), py(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            COLORS[k % COLORS.len()],
            points.join(" ")
        );
    }
}

pub fn svg(series: &[Series]) -> String {
    let width = 2.0 * PANEL_W;
    let height = PANEL_H + 20.0 + 16.0 * series.len() as f64;
    let mut out = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif">"#
    );
    out.push('\n');
    panel(&mut out, 0.0, "probability", series, false);
    panel(&mut out, PANEL_W, "probability (log scale)", series, true);
    for (k, s) in series.iter().enumerate() {
        let y = PANEL_H + 12.0 + 16.0 * k as f64;
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(
            out,
            r#"<line x1="{MARGIN}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            MARGIN + 20.0,
            MARGIN + 26.0,
            y + 4.0,
            s.name
        );
    }
    out.push_str("</svg>\n");
    out
}
