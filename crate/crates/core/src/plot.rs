//! Static SVG plot of cumulative regret with the theoretical bound overlaid.

use std::fmt::Write as _;
use std::path::Path;

use crate::sim::{regret_bound, RunResult};
use crate::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;

/// Parameters of the bound curve `t -> regret_bound(K, t, |F|, delta, tau_1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub num_actions: usize,
    pub class_size: usize,
    pub delta: f64,
    pub tau_1: u64,
}

impl BoundParams {
    pub fn at(&self, round: u64) -> f64 {
        regret_bound(
            self.num_actions,
            round,
            self.class_size,
            self.delta,
            self.tau_1,
        )
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the plot as a standalone SVG document.
/// `description` lands in the document's `<desc>` element; the CLI stores the
/// effective config there.
pub fn svg_string(
    result: &RunResult,
    bound: Option<BoundParams>,
    title: &str,
    description: &str,
) -> Result<String> {
    let records = &result.records;
    if records.len() < 2 {
        return Err(Error::config(
            "output.plot",
            "need at least two logged rounds to plot",
        ));
    }
    let first = records[0].round as f64;
    let last = records[records.len() - 1].round as f64;
    let regret: Vec<(f64, f64)> = records
        .iter()
        .map(|r| (r.round as f64, r.cum_regret))
        .collect();
    let curve: Vec<(f64, f64)> = bound
        .map(|b| {
            records
                .iter()
                .map(|r| (r.round as f64, b.at(r.round)))
                .collect()
        })
        .unwrap_or_default();

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for &(_, y) in regret.iter().chain(&curve) {
        lo = lo.min(y);
        hi = hi.max(y);
    }
    let sx = |x: f64| MARGIN + (x - first) / (last - first).max(1.0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - lo) / (hi - lo) * (HEIGHT - 2.0 * MARGIN);
    let points = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(title));
    let _ = writeln!(svg, "<desc>{}</desc>", escape(description));
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, y0, x1, y1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">round (1 .. {})</text>"#,
        WIDTH / 2.0,
        HEIGHT - 20.0,
        last
    );
    let _ = writeln!(
        svg,
        r#"<text x="15" y="{}" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {})">cumulative regret [{:.4} .. {:.4}]</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        lo,
        hi
    );
    let _ = writeln!(
        svg,
        r#"<polyline id="regret" fill="none" stroke="steelblue" stroke-width="1.5" data-final="{}" points="{}"/>"#,
        regret[regret.len() - 1].1,
        points(&regret)
    );
    if let Some(&(_, final_bound)) = curve.last() {
        let _ = writeln!(
            svg,
            r#"<polyline id="bound" fill="none" stroke="firebrick" stroke-dasharray="6 4" stroke-width="1.5" data-final="{}" points="{}"/>"#,
            final_bound,
            points(&curve)
        );
    }
    let _ = writeln!(svg, "</svg>");
    Ok(svg)
}

/// Writes the plot to `path`.
pub fn emit_plot(
    result: &RunResult,
    bound: Option<BoundParams>,
    title: &str,
    description: &str,
    path: &Path,
) -> Result<()> {
    let svg = svg_string(result, bound, title, description)?;
    std::fs::write(path, svg)?;
    Ok(())
}
