//! CSV and SVG writers for layers, densities, witnesses and convergence reports.

use std::io::Write;

use serde::Serialize;

use crate::analysis::ConvergenceReport;
use crate::error::Result;
use crate::network::{ArcPoint, Grid, Network, SampleSite};
use crate::scheme::{Branch, UpdateWitness};
use crate::traffic::DensityField;

#[derive(Serialize)]
struct ArcRow<'a> {
    arc_id: &'a str,
    s: f64,
    x_pos: f64,
    y_pos: f64,
    value: f64,
}

#[derive(Serialize)]
struct DensityRow<'a> {
    arc_id: &'a str,
    s: f64,
    x_pos: f64,
    y_pos: f64,
    rho: f64,
}

#[derive(Serialize)]
struct NodeDensityRow<'a> {
    node_id: &'a str,
    rho: f64,
}

#[derive(Serialize)]
struct WitnessRow<'a> {
    sample: usize,
    location: String,
    branch: Branch,
    value: f64,
    alpha_i: f64,
    s0: f64,
    arc_j: &'a str,
    alpha_j: f64,
}

/// Name of the file holding the layer at time `t`.
pub fn snapshot_file_name(prefix: &str, t: f64) -> String {
    format!("{prefix}_t{t:.4}.csv")
}

/// One row per arc grid point, nodes repeated on every incident arc.
fn arc_rows<'a>(net: &'a Network, grid: &Grid, values: impl Fn(usize, usize) -> f64) -> Vec<(&'a str, f64, [f64; 2], f64)> {
    let mut rows = Vec::with_capacity(grid.len() + grid.arcs.len());
    for (a, g) in grid.arcs.iter().enumerate() {
        for k in 0..=g.cells {
            let s = k as f64 * g.h;
            rows.push((net.arc(a).id.as_str(), s, net.position(ArcPoint { arc: a, s }), values(a, k)));
        }
    }
    rows
}

pub fn write_snapshot_csv(out: impl Write, net: &Network, grid: &Grid, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (arc_id, s, x, value) in arc_rows(net, grid, |a, k| values[grid.arcs[a].samples[k]]) {
        w.serialize(ArcRow { arc_id, s, x_pos: x[0], y_pos: x[1], value })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_density_csv(out: impl Write, net: &Network, grid: &Grid, field: &DensityField) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (arc_id, s, x, rho) in arc_rows(net, grid, |a, k| field.arcs[a][k]) {
        w.serialize(DensityRow { arc_id, s, x_pos: x[0], y_pos: x[1], rho })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_node_density_csv(out: impl Write, net: &Network, field: &DensityField) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (node, rho) in net.nodes().iter().zip(&field.nodes) {
        w.serialize(NodeDensityRow { node_id: &node.id, rho: *rho })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report_csv(out: impl Write, report: &ConvergenceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-sample branch and controls of one step.
pub fn write_witness_csv(out: impl Write, net: &Network, grid: &Grid, witnesses: &[UpdateWitness]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, wit) in witnesses.iter().enumerate() {
        let location = match grid.sites[i] {
            SampleSite::Node(n) => net.node(n).id.clone(),
            SampleSite::Interior { arc, k } => format!("{}@{}", net.arc(arc).id, k as f64 * grid.arcs[arc].h),
        };
        w.serialize(WitnessRow {
            sample: i,
            location,
            branch: wit.branch,
            value: wit.value,
            alpha_i: wit.alpha_i,
            s0: wit.s0,
            arc_j: wit.arc_j.map_or("", |a| net.arc(a).id.as_str()),
            alpha_j: wit.alpha_j,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Blue to yellow to red ramp on `[0, 1]`.
fn color(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let stops = [(49.0, 54.0, 149.0), (254.0, 224.0, 144.0), (165.0, 0.0, 38.0)];
    let (a, b, u) = if t < 0.5 { (stops[0], stops[1], 2.0 * t) } else { (stops[1], stops[2], 2.0 * t - 1.0) };
    let mix = |p: f64, q: f64| (p + u * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heat map of `values` drawn as one colored segment per grid cell, using
/// node positions in the plane.
pub fn write_svg(mut out: impl Write, net: &Network, grid: &Grid, values: &[f64], title: &str) -> Result<()> {
    let size = 800.0;
    let margin = 40.0;
    let pts: Vec<[f64; 2]> = net.nodes().iter().map(|n| n.position).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (size - 2.0 * margin) / span;
    let map = |p: [f64; 2]| (margin + (p[0] - lo[0]) * scale, size - margin - (p[1] - lo[1]) * scale);
    let finite = values.iter().copied().filter(|v| v.is_finite());
    let vmin = finite.clone().fold(f64::INFINITY, f64::min);
    let vmax = finite.fold(f64::NEG_INFINITY, f64::max);
    let range = if vmax > vmin { vmax - vmin } else { 1.0 };

    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#)?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(out, r#"<text x="{margin}" y="24" font-family="sans-serif" font-size="16">{title} [{vmin:.4}, {vmax:.4}]</text>"#)?;
    for (a, g) in grid.arcs.iter().enumerate() {
        for k in 0..g.cells {
            let p = map(net.position(ArcPoint { arc: a, s: k as f64 * g.h }));
            let q = map(net.position(ArcPoint { arc: a, s: (k + 1) as f64 * g.h }));
            let v = 0.5 * (values[g.samples[k]] + values[g.samples[k + 1]]);
            writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="4" stroke-linecap="round"/>"#,
                p.0,
                p.1,
                q.0,
                q.1,
                color((v - vmin) / range)
            )?;
        }
    }
    for (n, p) in pts.iter().enumerate() {
        let (x, y) = map(*p);
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"><title>{}</title></circle>"#, net.node(n).id)?;
    }
    writeln!(out, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::tests_support::single_arc;
    use crate::network::{build_grid, GridFunction};

    #[test]
    fn snapshot_columns_and_rows() {
        let net = single_arc(1.0);
        let grid = build_grid(&net, 0.5).unwrap();
        let v = GridFunction::sample(&net, &grid, 0.0, |p: ArcPoint| p.s);
        let mut buf = Vec::new();
        write_snapshot_csv(&mut buf, &net, &grid, &v.values).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "arc_id,s,x_pos,y_pos,value");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].ends_with(",1.0"));
    }

    #[test]
    fn color_ramp_ends() {
        assert_eq!(color(0.0), "#313695");
        assert_eq!(color(1.0), "#a50026");
        assert_eq!(color(f64::NAN), "#313695");
    }
}
