//! Minimal deterministic SVG line charts with a date axis.

use std::fmt::Write;

use chrono::NaiveDate;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub label: String,
    pub points: Vec<(NaiveDate, f64)>,
    /// Drawn thick, the convention for averaged series.
    pub bold: bool,
    pub dashed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub y_label: String,
    pub lines: Vec<Line>,
}

/// A round step close to `span / 5`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Y-axis range `[lo, hi]` covering every point, starting at zero for
/// non-negative data and rounded out to whole ticks.
fn y_range(lines: &[Line]) -> (f64, f64, f64) {
    let values = lines.iter().flat_map(|l| l.points.iter().map(|p| p.1));
    let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let lo = min.min(0.0);
    let hi = if max > lo { max } else { lo + 1.0 };
    let step = tick_step(hi - lo);
    let lo = (lo / step).floor() * step;
    let hi = (hi / step).ceil() * step;
    (lo, hi, step)
}

/// Renders the chart; the same chart always yields the same bytes.
pub fn render(chart: &Chart) -> String {
    let first = chart.lines.iter().flat_map(|l| l.points.iter().map(|p| p.0)).min();
    let last = chart.lines.iter().flat_map(|l| l.points.iter().map(|p| p.0)).max();
    let (Some(first), Some(last)) = (first, last) else {
        return empty(chart);
    };
    let days = (last - first).num_days() as f64;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let (lo, hi, step) = y_range(&chart.lines);
    let x_of = |d: NaiveDate| {
        if days == 0.0 {
            LEFT + pw / 2.0
        } else {
            LEFT + pw * (d - first).num_days() as f64 / days
        }
    };
    let y_of = |v: f64| TOP + ph * (hi - v) / (hi - lo);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="28" font-size="16" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(&chart.title)).unwrap();

    // horizontal grid and y labels
    let ticks = ((hi - lo) / step).round() as i64;
    for i in 0..=ticks {
        let v = lo + step * i as f64;
        let y = y_of(v);
        writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, format_tick(v, step)).unwrap();
    }
    // date ticks
    let every = if days > 120.0 { 28 } else if days > 60.0 { 14 } else { 7 };
    let mut d = first;
    while d <= last {
        let x = x_of(d);
        writeln!(s, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333333"/>"##, TOP + ph, TOP + ph + 5.0).unwrap();
        writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
            TOP + ph + 20.0,
            d.format("%Y-%m-%d")
        )
        .unwrap();
        d = d + chrono::Days::new(every);
    }
    writeln!(s, r##"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333"/>"##, TOP + ph, LEFT + pw, TOP + ph).unwrap();
    writeln!(s, r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="#333333"/>"##, TOP + ph).unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&chart.y_label)
    )
    .unwrap();

    for (i, line) in chart.lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let width = if line.bold { 3.0 } else { 1.2 };
        let dash = if line.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&(d, v)| format!("{:.2},{:.2}", x_of(d), y_of(v)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{}"/>"#,
            pts.join(" ")
        )
        .unwrap();
    }

    // legend
    for (i, line) in chart.lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = TOP + 14.0 + 18.0 * i as f64;
        let width = if line.bold { 3.0 } else { 1.2 };
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="{width}"/>"#,
            LEFT + 12.0,
            LEFT + 40.0
        )
        .unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#, LEFT + 46.0, y + 4.0, escape(&line.label)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn empty(chart: &Chart) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\"><text x=\"20\" y=\"30\">{} (no data)</text></svg>\n",
        escape(&chart.title)
    )
}

fn format_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    format!("{v:.decimals$}")
}
