//! Minimal SVG rendering of experiment figures: a cell heatmap under
//! polylines, chart square mapped to a fixed canvas with y up.

use std::fmt::Write as _;

use riemgrid::experiment::Figure;

const SIZE: f64 = 512.0;
const MARGIN: f64 = 16.0;

fn px(p: [f64; 2]) -> (f64, f64) {
    (MARGIN + p[0] * SIZE, MARGIN + (1.0 - p[1]) * SIZE)
}

/// Blue to yellow through teal.
fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let stops = [(68.0, 1.0, 84.0), (33.0, 145.0, 140.0), (253.0, 231.0, 37.0)];
    let (a, b, s) = if t < 0.5 { (stops[0], stops[1], t * 2.0) } else { (stops[1], stops[2], t * 2.0 - 1.0) };
    let mix = |x: f64, y: f64| (x + (y - x) * s).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

pub fn render(fig: &Figure) -> String {
    let full = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#);
    let _ = writeln!(s, "<title>{}</title>", fig.name);
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{full}" height="{full}" fill="#ffffff"/>"##);
    let finite = fig.cells.iter().map(|c| c.2).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    for &(o, size, v) in &fig.cells {
        let (x, y) = px([o[0], o[1] + size[1]]);
        let _ = writeln!(
            s,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
            size[0] * SIZE,
            size[1] * SIZE,
            color((v - lo) / span)
        );
    }
    for line in &fig.lines {
        let pts: Vec<String> = line
            .iter()
            .map(|&p| {
                let (x, y) = px(p);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##, pts.join(" "));
    }
    s.push_str("</svg>\n");
    s
}
