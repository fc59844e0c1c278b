//! Hand-emitted SVG plots: a scatter of the per-variant outcome associations
//! against the risk-factor associations, and a comparison of second-order
//! against first-order inverse-variance weights.
//!
//! Output is deterministic for fixed input: points are emitted in dataset
//! order and coordinates are formatted to fixed precision.

use std::fmt::Write as _;

use mrivw_core::ratio::{variance_first_order, variance_second_order};
use mrivw_core::summary::SummaryDataset;
use mrivw_core::Result;

/// Which plot to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Outcome association against risk-factor association, one point per
    /// variant.
    Scatter,
    /// Second-order weight against first-order weight, with the identity
    /// line for reference.
    Weights,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 50.0;
const POINT_RADIUS: f64 = 3.0;

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    /// Data bounds padded by 5% on each side; a degenerate range is widened
    /// symmetrically so the scale stays finite.
    fn from_data(xs: &[f64], ys: &[f64]) -> Axes {
        let pad = |min: f64, max: f64| {
            let span = max - min;
            if span > 0.0 {
                (min - 0.05 * span, max + 0.05 * span)
            } else {
                let half = min.abs().max(1.0) * 0.05;
                (min - half, max + half)
            }
        };
        let (x_min, x_max) = pad(
            xs.iter().cloned().fold(f64::INFINITY, f64::min),
            xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        let (y_min, y_max) = pad(
            ys.iter().cloned().fold(f64::INFINITY, f64::min),
            ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );
        Axes {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    fn sx(&self, x: f64) -> f64 {
        MARGIN_LEFT
            + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        HEIGHT
            - MARGIN_BOTTOM
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_values(min: f64, max: f64) -> Vec<f64> {
    let span = max - min;
    let raw_step = span / 5.0;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * magnitude);
    let mut ticks = Vec::new();
    let mut t = (min / step).ceil() * step;
    while t <= max + 1e-9 * step {
        // snap -0 to 0 for stable labels
        ticks.push(if t == 0.0 { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn write_frame(svg: &mut String, axes: &Axes, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black" stroke-width="1"/>"#,
        coord(MARGIN_LEFT),
        coord(MARGIN_TOP),
        coord(WIDTH - MARGIN_LEFT - MARGIN_RIGHT),
        coord(HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    );
    for t in tick_values(axes.x_min, axes.x_max) {
        let x = axes.sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{y1}" stroke="black" stroke-width="1"/>"#,
            x = coord(x),
            y0 = coord(HEIGHT - MARGIN_BOTTOM),
            y1 = coord(HEIGHT - MARGIN_BOTTOM + 5.0)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle">{label}</text>"#,
            x = coord(x),
            y = coord(HEIGHT - MARGIN_BOTTOM + 18.0),
            label = tick_label(t)
        );
    }
    for t in tick_values(axes.y_min, axes.y_max) {
        let y = axes.sy(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="black" stroke-width="1"/>"#,
            x0 = coord(MARGIN_LEFT - 5.0),
            x1 = coord(MARGIN_LEFT),
            y = coord(y)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="12" text-anchor="end">{label}</text>"#,
            x = coord(MARGIN_LEFT - 8.0),
            y = coord(y + 4.0),
            label = tick_label(t)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="14" text-anchor="middle">{x_label}</text>"#,
        x = coord((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        y = coord(HEIGHT - 10.0)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{x}" y="{y}" font-size="14" text-anchor="middle" transform="rotate(-90 {x} {y})">{y_label}</text>"#,
        x = coord(18.0),
        y = coord((MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0)
    );
}

fn render(
    xs: &[f64],
    ys: &[f64],
    ids: &[&str],
    x_label: &str,
    y_label: &str,
    identity_line: bool,
) -> String {
    let axes = Axes::from_data(xs, ys);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {} {}" width="{}" height="{}">"#,
        WIDTH as u32, HEIGHT as u32, WIDTH as u32, HEIGHT as u32
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#,
        WIDTH as u32, HEIGHT as u32
    );
    write_frame(&mut svg, &axes, x_label, y_label);
    if identity_line {
        let lo = axes.x_min.max(axes.y_min);
        let hi = axes.x_max.min(axes.y_max);
        if hi > lo {
            let _ = writeln!(
                svg,
                r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="gray" stroke-width="1" stroke-dasharray="4 3"/>"#,
                x0 = coord(axes.sx(lo)),
                y0 = coord(axes.sy(lo)),
                x1 = coord(axes.sx(hi)),
                y1 = coord(axes.sy(hi))
            );
        }
    }
    for ((&x, &y), id) in xs.iter().zip(ys).zip(ids) {
        let _ = writeln!(
            svg,
            r#"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="black" stroke-width="1"><title>{}</title></circle>"#,
            coord(axes.sx(x)),
            coord(axes.sy(y)),
            POINT_RADIUS,
            id
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders the requested plot for `dataset` as an SVG document.
pub fn render_plot(dataset: &SummaryDataset, kind: PlotKind) -> Result<String> {
    let ids: Vec<&str> = dataset.variants.iter().map(|v| v.id.as_str()).collect();
    match kind {
        PlotKind::Scatter => {
            let xs: Vec<f64> = dataset.variants.iter().map(|v| v.beta_x).collect();
            let ys: Vec<f64> = dataset.variants.iter().map(|v| v.beta_y).collect();
            Ok(render(
                &xs,
                &ys,
                &ids,
                "Genetic association with risk factor",
                "Genetic association with outcome",
                false,
            ))
        }
        PlotKind::Weights => {
            let mut xs = Vec::with_capacity(dataset.len());
            let mut ys = Vec::with_capacity(dataset.len());
            for v in &dataset.variants {
                xs.push(1.0 / variance_first_order(v)?);
                ys.push(1.0 / variance_second_order(v)?);
            }
            Ok(render(
                &xs,
                &ys,
                &ids,
                "First-order weight",
                "Second-order weight",
                true,
            ))
        }
    }
}
