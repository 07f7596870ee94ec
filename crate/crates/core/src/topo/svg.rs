use std::fmt::Write as _;

use super::{Path2D, Roadmap};
use crate::world::GridEsdf;

const SCALE: f64 = 50.0;
const MAX_CELLS: usize = 40_000;

/// Minimal SVG writer in world coordinates (y up).
#[derive(Debug, Clone)]
pub struct SvgCanvas {
    bounds: [f64; 4],
    body: String,
}

fn heat(d: f64) -> String {
    if d <= 0.0 {
        return "#303030".into();
    }
    let t = (d / 1.5).min(1.0);
    let r = (255.0 * (1.0 - 0.6 * t)) as u8;
    let g = (150.0 + 100.0 * t) as u8;
    let b = (120.0 + 135.0 * t) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

impl SvgCanvas {
    pub fn new(bounds: [f64; 4]) -> Self {
        Self { bounds, body: String::new() }
    }

    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        ((p[0] - self.bounds[0]) * SCALE, (self.bounds[3] - p[1]) * SCALE)
    }

    /// Colored cells for the distance field, downsampled for large grids.
    pub fn esdf(&mut self, g: &GridEsdf) -> &mut Self {
        let stride = ((g.width * g.height) as f64 / MAX_CELLS as f64).sqrt().ceil().max(1.0) as usize;
        let cell = g.resolution * stride as f64 * SCALE;
        for iy in (0..g.height).step_by(stride) {
            for ix in (0..g.width).step_by(stride) {
                let c = g.cell_center(ix, iy);
                let (x, y) = self.px([c[0] - 0.5 * g.resolution, c[1] - 0.5 * g.resolution]);
                let _ = writeln!(
                    self.body,
                    r#"<rect x="{x:.1}" y="{:.1}" width="{cell:.1}" height="{cell:.1}" fill="{}"/>"#,
                    y - cell,
                    heat(g.at(ix, iy))
                );
            }
        }
        self
    }

    pub fn roadmap(&mut self, r: &Roadmap) -> &mut Self {
        for (a, es) in r.edges.iter().enumerate() {
            for &(b, _) in es.iter().filter(|e| e.0 > a) {
                self.polyline(&[r.nodes[a], r.nodes[b]], "#8080ff", 1.0);
            }
        }
        for &n in &r.nodes {
            self.circle(n, 0.05, "#4040c0");
        }
        self
    }

    pub fn path(&mut self, p: &Path2D, color: &str, width: f64) -> &mut Self {
        self.polyline(&p.waypoints, color, width)
    }

    pub fn polyline(&mut self, pts: &[[f64; 2]], color: &str, width: f64) -> &mut Self {
        let mut s = String::new();
        for &p in pts {
            let (x, y) = self.px(p);
            let _ = write!(s, "{x:.1},{y:.1} ");
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            s.trim_end()
        );
        self
    }

    pub fn polygon(&mut self, pts: &[[f64; 2]], color: &str) -> &mut Self {
        let mut s = String::new();
        for &p in pts {
            let (x, y) = self.px(p);
            let _ = write!(s, "{x:.1},{y:.1} ");
        }
        let _ = writeln!(self.body, r#"<polygon points="{}" fill="none" stroke="{color}" stroke-width="1"/>"#, s.trim_end());
        self
    }

    pub fn circle(&mut self, c: [f64; 2], r: f64, color: &str) -> &mut Self {
        let (x, y) = self.px(c);
        let _ = writeln!(self.body, r#"<circle cx="{x:.1}" cy="{y:.1}" r="{:.1}" fill="{color}"/>"#, r * SCALE);
        self
    }

    pub fn finish(&self) -> String {
        let w = (self.bounds[2] - self.bounds[0]) * SCALE;
        let h = (self.bounds[3] - self.bounds[1]) * SCALE;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.1} {h:.1}\">\n{}</svg>\n",
            self.body
        )
    }
}
