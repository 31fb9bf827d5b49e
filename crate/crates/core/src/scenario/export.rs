use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Scenario, ScenarioError};
use crate::genetics::{fitness, ConsistencePoint};
use crate::geometry::Point2;
use crate::sourcing::KpiReport;

fn fmt_points(points: &[Point2], flip: impl Fn(Point2) -> (f64, f64)) -> String {
    points
        .iter()
        .map(|&p| {
            let (x, y) = flip(p);
            format!("{x:.6},{y:.6}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Static map image: one cell polygon per partner, a marker per generator
/// and a polyline per segment body. Cells are shaded by fitness.
pub fn render_map_svg(s: &Scenario) -> Result<String, ScenarioError> {
    let net = &s.network;
    if net.is_empty() {
        return Err(ScenarioError::Empty);
    }
    let u = net.universe();
    let flip = |p: Point2| (p.x - u.min.x, u.max.y - p.y);
    let r = 0.005 * u.width().max(u.height());
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {:.6} {:.6}" width="800" height="{:.0}">"#,
        u.width(),
        u.height(),
        800.0 * u.height() / u.width()
    );
    let _ = writeln!(out, r##"<g class="cells" stroke="#333" stroke-width="{:.6}">"##, r / 4.0);
    for (id, p) in &net.partners {
        let v = p.vertex.expect("placed partner");
        let cell = net.triangulation.voronoi_cell(v)?;
        let f = fitness(p, &net.environment).unwrap_or(0.0);
        let _ = writeln!(
            out,
            r#"<polygon class="cell" data-partner="{id}" fill="hsl({:.0},70%,75%)" points="{}"/>"#,
            120.0 * f,
            fmt_points(&cell.boundary, flip)
        );
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g class="segments" stroke="#000" stroke-width="{:.6}" fill="none">"##, r / 2.0);
    for (sid, seg) in net.triangulation.segments() {
        let ends = [net.triangulation.position(seg.tail), net.triangulation.position(seg.head)];
        let _ = writeln!(out, r#"<polyline class="segment" data-segment="{sid}" points="{}"/>"#, fmt_points(&ends, flip));
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r##"<g class="markers" fill="#000">"##);
    for v in net.triangulation.generators() {
        let (x, y) = flip(net.triangulation.position(v));
        let label = net.partner_at(v).map_or(String::new(), |id| format!(r#" data-partner="{id}""#));
        let _ = writeln!(out, r#"<circle class="marker"{label} cx="{x:.6}" cy="{y:.6}" r="{r:.6}"/>"#);
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn export_map_svg(s: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    let svg = render_map_svg(s)?;
    Ok(fs::write(path, svg)?)
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

/// `tick,p,q` rows of a consistence series.
pub fn consistence_csv(series: &[ConsistencePoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["tick", "p", "q"]).expect("in-memory writer");
    for c in series {
        w.write_record([c.tick.to_string(), c.p.to_string(), c.q.to_string()])
            .expect("in-memory writer");
    }
    finish(w)
}

/// `metric,value` rows of a KPI report.
pub fn kpi_csv(k: &KpiReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut rows = vec![
        ("fulfillment_rate".to_string(), k.fulfillment_rate.to_string()),
        ("contract_ticks".into(), k.contract_ticks.to_string()),
        ("fulfilled_ticks".into(), k.fulfilled_ticks.to_string()),
        ("severance_count".into(), k.severance_count.to_string()),
        ("mean_fitness".into(), k.mean_fitness.to_string()),
        ("diversity".into(), k.diversity.to_string()),
    ];
    rows.extend(k.per_contract.iter().enumerate().map(|(i, f)| (format!("contract_{i}"), f.to_string())));
    rows.extend(k.compliance.iter().map(|(r, ok)| (format!("compliance_{r}"), ok.to_string())));
    w.write_record(["metric", "value"]).expect("in-memory writer");
    for (m, v) in rows {
        w.write_record([m, v]).expect("in-memory writer");
    }
    finish(w)
}
