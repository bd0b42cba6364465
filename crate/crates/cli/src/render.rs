//! Static SVG pictures of networks and fluxes in the plane.

use std::fmt::Write;

use anyhow::{bail, Result};
use urbanbranch::{DiscreteMeasure, Finite, MassFlux, Point, StreetNetwork};

use crate::output::fmt;

const WIDTH: f64 = 640.0;
const MARGIN: f64 = 32.0;

struct Frame {
    min: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn new<'a>(points: impl Iterator<Item = &'a Point<f64>>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for i in 0..2 {
                lo[i] = lo[i].min(p.0[i]);
                hi[i] = hi[i].max(p.0[i]);
            }
        }
        if !lo[0].is_finite() {
            (lo, hi) = ([0.0; 2], [1.0; 2]);
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let scale = (WIDTH - 2.0 * MARGIN) / span;
        Frame { min: lo, scale, height: (hi[1] - lo[1]) * scale + 2.0 * MARGIN }
    }

    fn map(&self, p: &Point<f64>) -> (String, String) {
        let x = MARGIN + (p.0[0] - self.min[0]) * self.scale;
        let y = self.height - MARGIN - (p.0[1] - self.min[1]) * self.scale;
        (fmt(x), fmt(y))
    }
}

/// Roads are drawn gray by friction (black when free), flux edges by
/// stroke width proportional to mass, sources red and sinks blue.
pub fn svg(
    network: Option<&StreetNetwork<f64>>,
    flux: Option<&MassFlux<f64>>,
    mu_plus: &DiscreteMeasure<f64>,
    mu_minus: &DiscreteMeasure<f64>,
) -> Result<String> {
    let mut pts: Vec<&Point<f64>> = mu_plus.points().chain(mu_minus.points()).collect();
    if let Some(net) = network {
        pts.extend(net.segments().iter().flat_map(|s| [&s.p, &s.q]));
    }
    if let Some(f) = flux {
        pts.extend(f.edges().iter().flat_map(|e| [&e.tail, &e.head]));
    }
    if pts.iter().any(|p| p.dim() != 2) {
        bail!("render needs planar (two-dimensional) input");
    }
    let frame = Frame::new(pts.into_iter());
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = fmt(WIDTH),
        h = fmt(frame.height)
    )?;
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    if let Some(net) = network {
        let top = match net.ambient() {
            Finite(a) if a > 0.0 => a,
            _ => net.segments().iter().map(|g| g.b).fold(0.0, f64::max).max(1e-12),
        };
        writeln!(s, r#"<g id="network" stroke-linecap="round" stroke-width="4">"#)?;
        for g in net.segments() {
            let level = (30.0 + 190.0 * (g.b / top).clamp(0.0, 1.0)).round() as u8;
            let ((x1, y1), (x2, y2)) = (frame.map(&g.p), frame.map(&g.q));
            writeln!(
                s,
                r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="rgb({level},{level},{level})"><title>b = {}</title></line>"#,
                fmt(g.b)
            )?;
        }
        writeln!(s, "</g>")?;
    }
    if let Some(f) = flux {
        let top = f.edges().iter().map(|e| e.mass).fold(0.0, f64::max).max(1e-12);
        writeln!(s, r##"<g id="flux" stroke="#1f5fa8" stroke-opacity="0.8" stroke-linecap="round">"##)?;
        for e in f.edges() {
            let ((x1, y1), (x2, y2)) = (frame.map(&e.tail), frame.map(&e.head));
            let w = fmt(1.0 + 9.0 * e.mass / top);
            writeln!(
                s,
                r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke-width="{w}"><title>m = {}</title></line>"#,
                fmt(e.mass)
            )?;
        }
        writeln!(s, "</g>")?;
    }
    for (id, colour, mu) in [("sources", "#c0392b", mu_plus), ("sinks", "#2471a3", mu_minus)] {
        writeln!(s, r#"<g id="{id}" fill="{colour}">"#)?;
        for a in mu.atoms() {
            let (cx, cy) = frame.map(&a.point);
            writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="{}"/>"#, fmt(3.0 + 6.0 * a.mass.sqrt()))?;
        }
        writeln!(s, "</g>")?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}
