//! Minimal SVG 1.1 phase portraits.

use std::fmt::Write as _;

use cyclecert_core::dynamics::LimitCycle;
use cyclecert_core::geometry::ContourSet;
use cyclecert_core::model::{Point, Window};

struct Frame {
    window: Window,
    size: f64,
}

impl Frame {
    fn px(&self, p: Point) -> (f64, f64) {
        let w = self.window;
        let sx = (p[0] + w.x_max) / (2.0 * w.x_max) * self.size;
        let sy = (w.y_max - p[1]) / (2.0 * w.y_max) * self.size;
        (sx, sy)
    }

    /// Points joined into one `points` attribute; samples outside the
    /// window split the path.
    fn paths<'a, I>(&self, pts: I) -> Vec<String>
    where
        I: IntoIterator<Item = &'a Point>,
    {
        let mut out = Vec::new();
        let mut cur = String::new();
        for p in pts {
            if self.window.contains(*p) {
                let (x, y) = self.px(*p);
                let _ = write!(cur, "{x:.2},{y:.2} ");
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }
}

fn polyline(svg: &mut String, points: &str, style: &str) {
    let _ = writeln!(svg, r#"  <polyline points="{}" {style}/>"#, points.trim_end());
}

pub fn portrait(
    window: Window,
    size_px: u32,
    orbits: &[Vec<(f64, Point)>],
    cycle: Option<&LimitCycle>,
    a0: &ContourSet,
) -> String {
    let size = size_px as f64;
    let f = Frame { window, size };
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size_px}" height="{size_px}" viewBox="0 0 {size_px} {size_px}">"#
    );
    let _ = writeln!(svg, r#"  <rect width="100%" height="100%" fill="white"/>"#);

    let (x0, y0) = f.px([0.0, 0.0]);
    let _ = writeln!(svg, r#"  <line x1="0" y1="{y0:.2}" x2="{size}" y2="{y0:.2}" stroke="black" stroke-width="0.8"/>"#);
    let _ = writeln!(svg, r#"  <line x1="{x0:.2}" y1="0" x2="{x0:.2}" y2="{size}" stroke="black" stroke-width="0.8"/>"#);
    let _ = writeln!(
        svg,
        r#"  <text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">x</text>"#,
        size - 14.0,
        y0 - 4.0
    );
    let _ = writeln!(
        svg,
        r#"  <text x="{:.2}" y="12" font-size="12" font-family="sans-serif">y</text>"#,
        x0 + 4.0
    );

    for o in orbits {
        let pts: Vec<Point> = o.iter().map(|(_, p)| *p).collect();
        for path in f.paths(&pts) {
            polyline(&mut svg, &path, r##"fill="none" stroke="#888888" stroke-width="0.7""##);
        }
    }
    for line in &a0.polylines {
        for path in f.paths(line) {
            polyline(&mut svg, &path, r##"fill="none" stroke="#1f4fbf" stroke-width="1.6""##);
        }
    }
    if let Some(c) = cycle {
        for path in f.paths(&c.polyline()) {
            polyline(&mut svg, &path, r##"fill="none" stroke="#c0392b" stroke-width="2""##);
        }
    }
    svg.push_str("</svg>\n");
    svg
}
