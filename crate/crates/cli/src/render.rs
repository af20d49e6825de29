//! Schematic SVG drawing of a torus level embedding.
//!
//! The torus is the unit square with opposite sides identified. Level `j`
//! is the vertical line `x = (j - 1) / k`, and a vertex of rank `r` in its
//! level's circular order sits at `y = r / |V_j|`. Each edge is a polyline
//! through a slot on the layer's middle line; slots follow the layer's edge
//! order. A piece that is shorter going across `y = 0` is split there.

use std::fmt::Write as _;

use levelplan::level_graph::LevelGraph;
use levelplan::torus_planarity::{check_embedding, TorusEmbedding, TorusError};

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

fn px(t: f64) -> f64 {
    MARGIN + t * SIZE
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Pieces of the segment from `(x0, y0)` to `(x1, y1)` on the torus, going
/// the shorter way around in `y`.
fn pieces(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[(f64, f64); 2]> {
    let dy = y1 - y0;
    if dy.abs() <= 0.5 {
        return vec![[(x0, y0), (x1, y1)]];
    }
    let (edge0, edge1, total) = if dy > 0.0 { (0.0, 1.0, y0 + 1.0 - y1) } else { (1.0, 0.0, 1.0 - y0 + y1) };
    let xm = x0 + (x1 - x0) * ((y0 - edge0).abs() / total);
    vec![[(x0, y0), (xm, edge0)], [(xm, edge1), (x1, y1)]]
}

/// Renders `g` with embedding `emb`; fails if the embedding is invalid.
pub fn render_svg(g: &LevelGraph, emb: &TorusEmbedding) -> Result<String, TorusError> {
    if !check_embedding(g, emb)? {
        return Err(TorusError::Mismatch("embedding violates the layer conditions".to_string()));
    }
    let k = g.levels();
    let x_of = |level: usize| (level - 1) as f64 / k as f64;
    let mut y_of = vec![0.0; g.vertex_count()];
    for i in 1..=k {
        let order = emb.level(i).as_slice();
        for (r, &v) in order.iter().enumerate() {
            y_of[v] = r as f64 / order.len() as f64;
        }
    }
    let full = SIZE + 2.0 * MARGIN;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{full}" height="{full}" viewBox="0 0 {full} {full}">"#).unwrap();
    writeln!(s, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE}" height="{SIZE}" fill="none" stroke="#bbb" stroke-dasharray="4 4"/>"##).unwrap();
    for j in 1..=k {
        let x = px(x_of(j));
        writeln!(s, r#"<line class="level" data-level="{j}" x1="{x:.2}" y1="{MARGIN}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, MARGIN + SIZE)
            .unwrap();
    }
    for i in 1..=k {
        let order = emb.layer(i).as_slice();
        let x0 = x_of(i);
        let x1 = if i == k { 1.0 } else { x_of(i + 1) };
        let xm = (x0 + x1) / 2.0;
        let offset = order.first().map_or(0.0, |&e| y_of[g.edge(e).from]);
        for (slot, &e) in order.iter().enumerate() {
            let edge = g.edge(e);
            let ym = (offset + slot as f64 / order.len() as f64).fract();
            let mut parts = pieces(x0, y_of[edge.from], xm, ym);
            parts.extend(pieces(xm, ym, x1, y_of[edge.to]));
            let wrap = if i == k { " data-wrap=\"x\"" } else { "" };
            writeln!(s, r#"<g class="edge" data-edge="{}" data-layer="{i}"{wrap}>"#, escape(&g.edge_label(e))).unwrap();
            for [(ax, ay), (bx, by)] in parts {
                writeln!(
                    s,
                    r##"<polyline points="{:.2},{:.2} {:.2},{:.2}" fill="none" stroke="#1f5fa8"/>"##,
                    px(ax),
                    px(ay),
                    px(bx),
                    px(by)
                )
                .unwrap();
            }
            writeln!(s, "</g>").unwrap();
        }
    }
    for v in 0..g.vertex_count() {
        let (x, y) = (px(x_of(g.level(v))), px(y_of[v]));
        let name = escape(g.name(v));
        writeln!(s, r#"<circle class="vertex" data-vertex="{name}" cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12" font-family="monospace">{name}</text>"#, x + 6.0, y - 6.0).unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}
