//! Static SVG charts: ranked per-unit PDI bars and per-word activation strips.

use std::fmt::Write as _;

use charprobe_core::model::{ActivationTrace, Direction};
use charprobe_core::probe::{base_avg_abs, base_mad, PdiReport};

const FORWARD: &str = "#1f77b4";
const BACKWARD: &str = "#ff7f0e";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn color(d: Direction) -> &'static str {
    match d {
        Direction::Forward => FORWARD,
        Direction::Backward => BACKWARD,
    }
}

/// Bar chart of PDI values from largest to smallest, blue for forward and
/// orange for backward units, with a dashed line at the median index.
pub fn pdi_bars(report: &PdiReport, title: &str) -> String {
    let n = report.scores.len().max(1);
    let bar = (600.0 / n as f64).clamp(2.0, 24.0);
    let (left, top, plot_h) = (60.0, 40.0, 240.0);
    let plot_w = bar * n as f64;
    let width = left + plot_w + 20.0;
    let height = top + plot_h + 60.0;
    let max = report
        .scores
        .first()
        .map_or(0.0, |s| s.pdi)
        .max(f64::MIN_POSITIVE);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, "<!-- pdi-bars v{} -->", report.format_version);
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="20" font-size="13">{} (mass {:.3}, head forwardness {:.3})</text>"#,
        escape(title),
        report.mass,
        report.head_forwardness
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#,
        top + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        top + plot_h,
        left + plot_w
    );
    for k in 0..=4 {
        let v = max * k as f64 / 4.0;
        let y = top + plot_h - plot_h * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
            left - 4.0,
            y + 4.0
        );
    }
    for (r, s) in report.scores.iter().enumerate() {
        let h = plot_h * s.pdi / max;
        let x = left + bar * r as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{}"><title>rank {} unit {} {} {}</title></rect>"#,
            top + plot_h - h,
            (bar - 0.5).max(1.0),
            color(s.direction),
            r + 1,
            s.unit,
            s.direction.as_str(),
            s.pdi
        );
    }
    let mx = left + bar * report.median_index as f64;
    let _ = writeln!(
        svg,
        r#"<line x1="{mx:.2}" y1="{top}" x2="{mx:.2}" y2="{}" stroke="black" stroke-dasharray="4 3"/>"#,
        top + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<text x="{mx:.2}" y="{}" text-anchor="middle">median index {}</text>"#,
        top - 4.0,
        report.median_index
    );
    let legend_y = top + plot_h + 36.0;
    let _ = writeln!(
        svg,
        r#"<rect x="{left}" y="{}" width="10" height="10" fill="{FORWARD}"/><text x="{}" y="{legend_y}">forward</text>"#,
        legend_y - 9.0,
        left + 14.0
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="10" height="10" fill="{BACKWARD}"/><text x="{}" y="{legend_y}">backward</text>"#,
        left + 80.0,
        legend_y - 9.0,
        left + 94.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">units ranked by PDI (nats)</text>"#,
        left + plot_w / 2.0,
        top + plot_h + 16.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Diverging fill for an activation in [-1, 1]: blue negative, red positive.
fn heat(v: f64) -> String {
    let t = v.clamp(-1.0, 1.0);
    let fade = |a: f64| (255.0 * (1.0 - a)).round() as u8;
    if t >= 0.0 {
        format!("rgb(255,{0},{0})", fade(t))
    } else {
        format!("rgb({0},{0},255)", fade(-t))
    }
}

/// One row of cells per unit, one column per character, shaded by the
/// unit's activation at that position.
pub fn activation_strip(trace: &ActivationTrace, units: &[usize]) -> String {
    let cell = 28.0;
    let (left, top) = (190.0, 30.0);
    let width = left + cell * trace.word_len() as f64 + 20.0;
    let height = top + cell * units.len() as f64 + 30.0;
    let word: String = trace.word.iter().collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, "<!-- activation-strip v1 -->");
    let _ = writeln!(
        svg,
        r#"<text x="10" y="18" font-size="13">activations for "{}"</text>"#,
        escape(&word)
    );
    for (row, &u) in units.iter().enumerate() {
        let Ok(values) = trace.unit(u) else { continue };
        let y = top + cell * row as f64;
        let avg = base_avg_abs(trace, u).unwrap_or(0.0);
        let mad = base_mad(trace, u).unwrap_or(0.0);
        let _ = writeln!(
            svg,
            r#"<text x="10" y="{:.1}" fill="{}">unit {u} {} avg {avg:.2} mad {mad:.2}</text>"#,
            y + cell * 0.6,
            color(trace.directions[u]),
            trace.directions[u].as_str()
        );
        for (c, &v) in values.iter().enumerate() {
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{y:.1}" width="{cell}" height="{cell}" fill="{}" stroke="white"><title>{v}</title></rect>"#,
                left + cell * c as f64,
                heat(v)
            );
        }
    }
    let y = top + cell * units.len() as f64 + 16.0;
    for (c, ch) in trace.word.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{y:.1}" text-anchor="middle">{}</text>"#,
            left + cell * (c as f64 + 0.5),
            escape(&ch.to_string())
        );
    }
    svg.push_str("</svg>\n");
    svg
}
