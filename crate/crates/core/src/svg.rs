//! Static SVG line charts of labels, queues and arc loads.
//!
//! Curves are piecewise linear, so each series is drawn exactly through its
//! breakpoints inside the plotted window. Coordinates are printed with two
//! decimals, which keeps the output byte-stable for identical inputs.

use std::fmt::Write as _;

use crate::dynamics::EquilibriumTrajectory;
use crate::num::{self, Q};
use crate::pwl::PiecewiseLinear;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Labels,
    Queues,
    Loads,
}

impl PlotKind {
    fn title(self) -> &'static str {
        match self {
            PlotKind::Labels => "earliest arrival labels",
            PlotKind::Queues => "queue lengths",
            PlotKind::Loads => "arc loads",
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const LEGEND: f64 = 120.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn series(traj: &EquilibriumTrajectory, kind: PlotKind) -> Vec<(String, PiecewiseLinear)> {
    let net = traj.network();
    match kind {
        PlotKind::Labels => net.node_ids().map(|v| (net.node_name(v).to_string(), traj.label(v).clone())).collect(),
        PlotKind::Queues => net.arc_ids().map(|e| (net.arc(e).name.clone(), traj.queue_function(e))).collect(),
        PlotKind::Loads => net.arc_ids().map(|e| (net.arc(e).name.clone(), traj.load_function(e))).collect(),
    }
}

/// Last finite breakpoint of the plotted functions or phase starts, plus 25%.
/// Falls back to 1 when everything happens at time zero.
pub fn default_plot_horizon(traj: &EquilibriumTrajectory, kind: PlotKind) -> Q {
    let mut last = num::zero();
    for (_, f) in series(traj, kind) {
        last = num::max_q(&last, f.last_breakpoint()).clone();
    }
    for p in traj.phases() {
        last = num::max_q(&last, &p.start).clone();
    }
    if let Some(end) = traj.end().finite() {
        last = num::max_q(&last, end).clone();
    }
    if last <= num::zero() {
        return num::one();
    }
    &last + &last / num::int(4)
}

fn visible_points(f: &PiecewiseLinear, horizon: &Q) -> Vec<(f64, f64)> {
    let zero = num::zero();
    let mut times = vec![zero.clone()];
    times.extend(f.breakpoints().filter(|t| **t > zero && *t < horizon).cloned());
    times.push(horizon.clone());
    times.iter().map(|t| (num::to_f64(t), num::to_f64(&f.eval(t)))).collect()
}

fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn fmt_tick(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn render_svg(traj: &EquilibriumTrajectory, kind: PlotKind, horizon: Option<&Q>) -> String {
    let horizon = horizon.cloned().unwrap_or_else(|| default_plot_horizon(traj, kind));
    let curves: Vec<(String, Vec<(f64, f64)>)> =
        series(traj, kind).into_iter().map(|(name, f)| (name, visible_points(&f, &horizon))).collect();
    let x_max = num::to_f64(&horizon);
    let y_max = curves.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)).fold(0.0f64, f64::max).max(1.0);
    let plot_w = WIDTH - 2.0 * MARGIN - LEGEND;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + x / x_max * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - y / y_max * plot_h;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, kind.title());

    let (x0, y0) = (sx(0.0), sy(0.0));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.2},{:.2} V{y0:.2} H{:.2}" fill="none" stroke="black"/>"#,
        sy(y_max),
        sx(x_max)
    );
    for (axis, max) in [('x', x_max), ('y', y_max)] {
        let step = tick_step(max);
        let mut k = 0u32;
        loop {
            let v = step * f64::from(k);
            if v > max * (1.0 + 1e-9) {
                break;
            }
            let label = fmt_tick(v);
            if axis == 'x' {
                let x = sx(v);
                let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y0 + 4.0);
                let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
            } else {
                let y = sy(v);
                let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
                let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, x0 - 7.0, y + 4.0);
            }
            k += 1;
        }
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">θ</text>"#, MARGIN + plot_w / 2.0, HEIGHT - 14.0);

    for (i, (name, pts)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut d = String::new();
        for (j, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if j == 0 { "M" } else { " L" }, sx(*x), sy(*y));
        }
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="2"/>"#);
        let ly = MARGIN + 18.0 * i as f64;
        let lx = WIDTH - MARGIN - LEGEND + 16.0;
        let _ = writeln!(out, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{compute_nash_flow, TerminationPolicy};
    use crate::fixtures::intro_network;
    use crate::network::validate_network;
    use crate::num::{int, ratio};

    fn right() -> EquilibriumTrajectory {
        let net = validate_network(&intro_network(2)).unwrap();
        compute_nash_flow(&net, &TerminationPolicy::default()).unwrap()
    }

    #[test]
    fn horizon_extends_last_breakpoint_by_a_quarter() {
        let traj = right();
        let h = default_plot_horizon(&traj, PlotKind::Queues);
        let last = traj.network().arc_ids().map(|e| traj.queue_function(e).last_breakpoint().clone()).max().unwrap();
        assert_eq!(h, num::max_q(&last, &int(6)) * ratio(5, 4));
    }

    #[test]
    fn renders_one_path_per_series() {
        let traj = right();
        let svg = render_svg(&traj, PlotKind::Loads, None);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("stroke-width=\"2\"/>").count(), 2 * 3);
        assert_eq!(svg, render_svg(&traj, PlotKind::Loads, None));
    }
}
