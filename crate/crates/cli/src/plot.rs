//! Standalone SVG trajectory plots: median line, shaded q1..q3 band, log x
//! axis and an optional dashed vertical marker.

use std::fmt::Write;

use qdela::ela::FeatureCode;
use qdela::harness::{aggregate_line, AggregateRow};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub rows: Vec<AggregateRow>,
}

pub struct PlotSpec {
    pub code: FeatureCode,
    pub series: Vec<Series>,
    pub marker: Option<u64>,
}

/// `series,eval_count,median,q1,q3`; each row after the label is the
/// aggregate line of that checkpoint.
pub fn plot_csv(spec: &PlotSpec) -> String {
    let mut out = String::from("series,eval_count,median,q1,q3\n");
    for s in &spec.series {
        for row in &s.rows {
            let _ = writeln!(out, "{},{}", s.label, aggregate_line(row));
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Shortest decimal label with at most 4 significant digits.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let s = format!("{:.3e}", v);
    let parsed: f64 = s.parse().unwrap_or(v);
    let plain = format!("{parsed}");
    if plain.len() <= 8 {
        plain
    } else {
        format!("{parsed:e}")
    }
}

/// `None` when no series has a defined point.
pub fn render_svg(spec: &PlotSpec) -> Option<String> {
    let points: Vec<(u64, f64, f64)> = spec
        .series
        .iter()
        .flat_map(|s| s.rows.iter())
        .filter_map(|r| r.quartiles.map(|q| (r.eval_count, q.q1, q.q3)))
        .collect();
    if points.is_empty() {
        return None;
    }
    let lx = |e: u64| (e.max(1) as f64).log10();
    let mut x_lo = points.iter().map(|p| lx(p.0)).fold(f64::INFINITY, f64::min);
    let mut x_hi = points.iter().map(|p| lx(p.0)).fold(f64::NEG_INFINITY, f64::max);
    if let Some(m) = spec.marker {
        x_lo = x_lo.min(lx(m));
        x_hi = x_hi.max(lx(m));
    }
    x_lo = x_lo.floor();
    x_hi = x_hi.ceil();
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    let mut y_lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut y_hi = points.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let pad = if y_hi > y_lo { 0.05 * (y_hi - y_lo) } else { 0.1 * y_lo.abs().max(1.0) };
    y_lo -= pad;
    y_hi += pad;

    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |e: u64| LEFT + (lx(e) - x_lo) / (x_hi - x_lo) * pw;
    let sy = |v: f64| TOP + (y_hi - v) / (y_hi - y_lo) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{} ({})</text>"#,
        LEFT + pw / 2.0,
        spec.code,
        escape(spec.code.name())
    );

    // axes and ticks
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    let mut decade = x_lo as i32;
    while decade as f64 <= x_hi {
        let x = LEFT + (decade as f64 - x_lo) / (x_hi - x_lo) * pw;
        let _ = writeln!(
            svg,
            r#"<path d="M{x:.2},{} v5" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">1e{decade}</text>"#,
            TOP + ph,
            TOP + ph + 18.0
        );
        decade += 1;
    }
    for i in 0..=4 {
        let v = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r#"<path d="M{LEFT},{y:.2} h-5" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            tick_label(v)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">evaluations</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0
    );

    for (i, s) in spec.series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let defined: Vec<(u64, f64, f64, f64)> = s
            .rows
            .iter()
            .filter_map(|r| r.quartiles.map(|q| (r.eval_count, q.median, q.q1, q.q3)))
            .collect();
        if !defined.is_empty() {
            let mut band: Vec<String> = defined.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.3))).collect();
            band.extend(defined.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.2))));
            let _ = writeln!(
                svg,
                r#"<polygon class="band" points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
                band.join(" ")
            );
            let line: Vec<String> = defined.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline class="median" points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
                line.join(" ")
            );
            for p in &defined {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                    sx(p.0),
                    sy(p.1)
                );
            }
        }
        let ly = TOP + 16.0 + 20.0 * i as f64;
        let lx0 = LEFT + pw + 16.0;
        let _ = writeln!(
            svg,
            r#"<path d="M{lx0},{ly} h20" stroke="{colour}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx0 + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }

    if let Some(m) = spec.marker {
        let x = sx(m);
        let _ = writeln!(
            svg,
            r#"<line class="marker" x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="black" stroke-dasharray="6 4"/>"#,
            TOP + ph
        );
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use qdela::stats::Quartiles;

    fn row(e: u64, m: f64) -> AggregateRow {
        AggregateRow {
            eval_count: e,
            quartiles: Some(Quartiles { median: m, q1: m - 1.0, q3: m + 1.0 }),
        }
    }

    fn spec(series: Vec<Series>, marker: Option<u64>) -> PlotSpec {
        PlotSpec {
            code: FeatureCode::new(5).unwrap(),
            series,
            marker,
        }
    }

    #[test]
    fn marker_is_one_dashed_line_inside_the_axis() {
        let s = spec(
            vec![Series { label: "a<b".into(), rows: vec![row(100, 1.0), row(1000, 2.0)] }],
            Some(100_000),
        );
        let svg = render_svg(&s).unwrap();
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains(">1e5<"));
    }

    #[test]
    fn undefined_only_has_no_plot() {
        let s = spec(
            vec![Series { label: "x".into(), rows: vec![AggregateRow { eval_count: 10, quartiles: None }] }],
            None,
        );
        assert!(render_svg(&s).is_none());
        assert_eq!(plot_csv(&s), "series,eval_count,median,q1,q3\nx,10,,,\n");
    }

    #[test]
    fn tick_labels_are_short() {
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(1.0 / 3.0), "0.3333");
        assert_eq!(tick_label(123456789.0), "1.235e8");
    }
}
