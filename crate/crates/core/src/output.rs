//! Text formats for run artifacts.

use std::fmt::Write;

use crate::geometry::Vec2;
use crate::problem::InitialDensity;

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Axis-aligned plotting window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vec2,
    pub max: Vec2,
}

impl Bounds {
    pub fn around(points: &[Vec2]) -> Option<Bounds> {
        let first = *points.iter().find(|p| p.is_finite())?;
        let mut b = Bounds { min: first, max: first };
        for p in points.iter().filter(|p| p.is_finite()) {
            b.include(*p);
        }
        Some(b)
    }

    pub fn include(&mut self, p: Vec2) {
        self.min = Vec2::new(self.min.x.min(p.x), self.min.y.min(p.y));
        self.max = Vec2::new(self.max.x.max(p.x), self.max.y.max(p.y));
    }

    pub fn union(self, other: Bounds) -> Bounds {
        let mut b = self;
        b.include(other.min);
        b.include(other.max);
        b
    }

    pub fn padded(self, fraction: f64) -> Bounds {
        let pad = (self.max - self.min) * fraction;
        let pad = Vec2::new(pad.x.max(1e-9), pad.y.max(1e-9));
        Bounds {
            min: self.min - pad,
            max: self.max + pad,
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// One frame as SVG: `rho0` shaded on a `cells`-per-axis grid, the target outline
/// dashed, and the boundary polygon on top.
pub struct FrameSvg<'a> {
    pub view: Bounds,
    pub density: &'a InitialDensity,
    pub target_outline: &'a [Vec2],
    pub curve: &'a [Vec2],
    pub title: String,
    pub cells: usize,
    pub width_px: f64,
}

fn shade(level: f64) -> String {
    // white to deep blue
    let l = level.clamp(0.0, 1.0);
    let r = (255.0 * (1.0 - 0.85 * l)).round() as u8;
    let g = (255.0 * (1.0 - 0.6 * l)).round() as u8;
    let b = (255.0 * (1.0 - 0.2 * l)).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

impl FrameSvg<'_> {
    pub fn render(&self) -> String {
        let v = self.view;
        let scale = self.width_px / v.width();
        let height_px = v.height() * scale;
        let px = |p: Vec2| ((p.x - v.min.x) * scale, (v.max.y - p.y) * scale);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#,
            self.width_px, height_px, self.width_px, height_px
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

        let n = self.cells.max(1);
        let (cw, ch) = (v.width() / n as f64, v.height() / n as f64);
        let mut values = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                let c = Vec2::new(v.min.x + (ix as f64 + 0.5) * cw, v.min.y + (iy as f64 + 0.5) * ch);
                values.push(self.density.eval(c));
            }
        }
        let peak = values.iter().cloned().fold(0.0f64, f64::max);
        if peak > 0.0 {
            for iy in 0..n {
                for ix in 0..n {
                    let level = values[iy * n + ix] / peak;
                    if level < 1e-3 {
                        continue;
                    }
                    let (x, y) = px(Vec2::new(v.min.x + ix as f64 * cw, v.min.y + (iy + 1) as f64 * ch));
                    let _ = writeln!(
                        s,
                        r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
                        cw * scale + 0.05,
                        ch * scale + 0.05,
                        shade(level)
                    );
                }
            }
        }

        let polygon = |pts: &[Vec2]| {
            pts.iter()
                .map(|p| {
                    let (x, y) = px(*p);
                    format!("{x:.3},{y:.3}")
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="none" stroke="#555555" stroke-width="1" stroke-dasharray="4 3"/>"##,
            polygon(self.target_outline)
        );
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#d62728" fill-opacity="0.15" stroke="#d62728" stroke-width="1.5"/>"##,
            polygon(self.curve)
        );
        let _ = writeln!(
            s,
            r#"<text x="8" y="18" font-family="sans-serif" font-size="14">{}</text>"#,
            self.title
        );
        s.push_str("</svg>\n");
        s
    }
}
