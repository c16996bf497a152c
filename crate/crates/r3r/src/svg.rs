//! Static SVG rendering of a run: obstacles, driven paths, planning circles
//! around the spawn points, and goals.

use std::fmt::Write as _;

use r3r_core::sim::TraceSample;
use r3r_core::Scenario;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

pub fn render(scenario: &Scenario, traces: &[Vec<TraceSample>]) -> String {
    let env = &scenario.env;
    let (lo, hi) = env.bounds();
    let scale = 800.0 / (hi.x - lo.x).max(hi.y - lo.y);
    let w = (hi.x - lo.x) * scale;
    let h = (hi.y - lo.y) * scale;
    let sx = |x: f64| (x - lo.x) * scale;
    let sy = |y: f64| (hi.y - y) * scale;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{w:.2}" height="{h:.2}" fill="#ffffff"/>"##);

    // obstacles as horizontal runs of occupied cells
    let res = env.resolution();
    let o = env.origin();
    let raw = env.raw();
    let _ = writeln!(out, r##"<g class="obstacles" fill="#555555">"##);
    for row in 0..raw.height() {
        let mut col = 0;
        while col < raw.width() {
            if !raw.get(col, row) {
                col += 1;
                continue;
            }
            let start = col;
            while col < raw.width() && raw.get(col, row) {
                col += 1;
            }
            let x0 = o.x + start as f64 * res;
            let y1 = o.y + (row + 1) as f64 * res;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
                sx(x0),
                sy(y1),
                (col - start) as f64 * res * scale,
                res * scale
            );
        }
    }
    out.push_str("</g>\n");

    let r_plan = scenario.params.r_plan();
    let _ = writeln!(out, r#"<g class="planning-circles" fill="none" stroke-dasharray="4 3">"#);
    for (i, a) in scenario.agents.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}" stroke="{}"/>"#,
            sx(a.spawn.x),
            sy(a.spawn.y),
            r_plan * scale,
            PALETTE[i % PALETTE.len()]
        );
    }
    out.push_str("</g>\n");

    let _ = writeln!(out, r#"<g class="paths" fill="none" stroke-width="1.5">"#);
    for (i, t) in traces.iter().enumerate() {
        if t.is_empty() {
            continue;
        }
        let mut pts = String::new();
        for s in t {
            let _ = write!(pts, "{:.2},{:.2} ", sx(s.x), sy(s.y));
        }
        let _ = writeln!(out, r#"<polyline points="{}" stroke="{}"/>"#, pts.trim_end(), PALETTE[i % PALETTE.len()]);
    }
    out.push_str("</g>\n");

    let _ = writeln!(out, r#"<g class="goals">"#);
    for (i, a) in scenario.agents.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
            sx(a.goal.x),
            sy(a.goal.y),
            PALETTE[i % PALETTE.len()]
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
