//! Minimal deterministic SVG line charts from CSV columns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Column selection for [`emit_plot`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlotColumns {
    pub x: String,
    pub y: Vec<String>,
    /// Rows are split into one series per distinct value of this column.
    pub group: Option<String>,
}

impl PlotColumns {
    pub fn new(x: &str, y: &[&str], group: Option<&str>) -> Self {
        Self { x: x.to_owned(), y: y.iter().map(|s| (*s).to_owned()).collect(), group: group.map(str::to_owned) }
    }

    /// Rate against total power, one series per mode.
    pub fn sweep_default() -> Self {
        Self::new("total_power_dbm", &["closed_form_rate", "mc_rate"], Some("mode"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Extracts numeric series; cells that are not finite numbers are skipped.
pub fn read_series(csv_text: &str, columns: &PlotColumns) -> Result<Vec<Series>> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(csv_text.as_bytes());
    let header = reader.headers()?.clone();
    let index = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn(name.to_owned()));
    let xi = index(&columns.x)?;
    let yi: Vec<usize> = columns.y.iter().map(|c| index(c)).collect::<Result<_>>()?;
    let gi = columns.group.as_deref().map(index).transpose()?;

    // series keyed by (first appearance of group, y column) for stable ordering
    let mut groups: Vec<String> = Vec::new();
    let mut series: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let number = |i: usize| record.get(i).and_then(|s| s.trim().parse::<f64>().ok()).filter(|v| v.is_finite());
        let Some(x) = number(xi) else { continue };
        let g = gi.map_or(String::new(), |i| record.get(i).unwrap_or("").to_owned());
        let slot = match groups.iter().position(|v| *v == g) {
            Some(p) => p,
            None => {
                groups.push(g);
                groups.len() - 1
            }
        };
        for (k, &i) in yi.iter().enumerate() {
            if let Some(y) = number(i) {
                series.entry((slot, k)).or_default().push((x, y));
            }
        }
    }
    Ok(series
        .into_iter()
        .map(|((slot, k), points)| {
            let label = match (&columns.group, columns.y.len()) {
                (Some(_), 1) => groups[slot].clone(),
                (Some(_), _) => format!("{} {}", groups[slot], columns.y[k]),
                (None, _) => columns.y[k].clone(),
            };
            Series { label, points }
        })
        .collect())
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    mag * if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    }
}

fn axis(lo: f64, hi: f64) -> (f64, f64, f64) {
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let step = nice_step(hi - lo);
    ((lo / step).floor() * step, (hi / step).ceil() * step, step)
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    let s = format!("{v:.decimals$}");
    if s == "-0" {
        "0".to_owned()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders an SVG line chart of `columns.y` against `columns.x`.
pub fn emit_plot(csv_text: &str, columns: &PlotColumns, title: &str) -> Result<String> {
    let series = read_series(csv_text, columns)?;
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (xa, xb, xs) = axis(x0, x1);
    let (ya, yb, ys) = axis(y0.min(0.0), y1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - xa) / (xb - xa) * pw;
    let py = |y: f64| TOP + ph - (y - ya) / (yb - ya) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    let ticks = |a: f64, b: f64, s: f64| {
        let n = (((b - a) / s).round() as usize).min(50);
        (0..=n).map(move |i| a + i as f64 * s)
    };
    for x in ticks(xa, xb, xs) {
        let _ = writeln!(
            svg,
            r##"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#e0e0e0"/>"##,
            px(x),
            TOP,
            TOP + ph
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            px(x),
            TOP + ph + 16.0,
            fmt_tick(x, xs)
        );
    }
    for y in ticks(ya, yb, ys) {
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{2:.2}" x2="{1:.2}" y2="{2:.2}" stroke="#e0e0e0"/>"##,
            LEFT,
            LEFT + pw,
            py(y)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py(y) + 4.0,
            fmt_tick(y, ys)
        );
    }
    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&columns.x)
    );
    let ylabel = escape(&columns.y.join(", "));
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">{ylabel}</text>"#,
        TOP + ph / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash =
            if i / PALETTE.len() % 2 == 1 || s.label.ends_with("mc_rate") { r#" stroke-dasharray="5 3""# } else { "" };
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2"{dash} points="{}"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
