//! Polygonal boundaries of the transported target: normals, flux integrals,
//! the Green-theorem mass and resampling.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::output::fmt_num;
use crate::problem::{ControlAffineField, InitialDensity};

/// Shoelace signed area; positive for counterclockwise polygons.
pub fn signed_area(vertices: &[Vec2]) -> f64 {
    let n = vertices.len();
    let mut twice = 0.0;
    for i in 0..n {
        twice += vertices[i].cross(vertices[(i + 1) % n]);
    }
    0.5 * twice
}

/// True when no two non-adjacent edges intersect.
pub fn is_simple(vertices: &[Vec2]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let orient = |a: Vec2, b: Vec2, c: Vec2| (b - a).cross(c - a);
    for i in 0..n {
        let (a, b) = (vertices[i], vertices[(i + 1) % n]);
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (vertices[j], vertices[(j + 1) % n]);
            let d1 = orient(a, b, c);
            let d2 = orient(a, b, d);
            let d3 = orient(c, d, a);
            let d4 = orient(c, d, b);
            if d1 * d2 <= 0.0 && d3 * d4 <= 0.0 {
                return false;
            }
        }
    }
    true
}

/// Oriented closed polygon sampling `dA^t` with per-vertex density and Jacobian payload.
/// The polygon is implicitly closed: the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub time: f64,
    pub vertices: Vec<Vec2>,
    pub density: Vec<f64>,
    pub jacobian_det: Vec<f64>,
}

/// Flux integrals of the drift and each channel: `H(w) = drift + sum_i phi_i(t, w) channels[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxCoefficients {
    pub drift: f64,
    pub channels: Vec<f64>,
}

impl FluxCoefficients {
    pub fn hamiltonian(&self, field: &ControlAffineField, t: f64, w: &[f64]) -> f64 {
        let phi = field.weights(t, w);
        self.drift + self.control_part(&phi)
    }

    /// `sum_i phi_i c_i` for precomputed channel weights.
    pub fn control_part(&self, phi: &[f64]) -> f64 {
        phi.iter().zip(&self.channels).map(|(p, c)| p * c).sum()
    }
}

impl BoundaryCurve {
    pub fn new(time: f64, vertices: Vec<Vec2>, density: Vec<f64>, jacobian_det: Vec<f64>) -> Result<Self> {
        let n = vertices.len();
        for len in [density.len(), jacobian_det.len()] {
            if len != n {
                return Err(Error::LengthMismatch { expected: n, actual: len });
            }
        }
        Ok(BoundaryCurve {
            time,
            vertices,
            density,
            jacobian_det,
        })
    }

    /// Curve with constant density `rho` and unit Jacobian.
    pub fn with_uniform_density(time: f64, vertices: Vec<Vec2>, rho: f64) -> Self {
        let n = vertices.len();
        BoundaryCurve {
            time,
            vertices,
            density: vec![rho; n],
            jacobian_det: vec![1.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// `l_i = |x_{i+1} - x_i|`, cyclic.
    pub fn segment_lengths(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm())
            .collect()
    }

    pub fn perimeter(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    fn check_oriented(&self) -> Result<()> {
        if self.len() < 3 {
            return Err(Error::DegenerateCurve(format!("{} vertices, need at least 3", self.len())));
        }
        let area = self.signed_area();
        if !(area > 0.0) {
            return Err(Error::Orientation { area });
        }
        Ok(())
    }

    /// Central-difference tangents `(x_{i+1} - x_{i-1}) / 2`.
    fn tangents(&self) -> Result<Vec<Vec2>> {
        self.check_oriented()?;
        let n = self.len();
        (0..n)
            .map(|i| {
                let t = (self.vertices[(i + 1) % n] - self.vertices[(i + n - 1) % n]) * 0.5;
                if t.norm() == 0.0 {
                    Err(Error::DegenerateCurve(format!("zero-length tangent at vertex {i}")))
                } else {
                    Ok(t)
                }
            })
            .collect()
    }

    /// Unit outward normals: the central-difference tangent rotated by -pi/2.
    pub fn outward_normals(&self) -> Result<Vec<Vec2>> {
        Ok(self
            .tangents()?
            .into_iter()
            .map(|t| t.rotate_cw() * (1.0 / t.norm()))
            .collect())
    }

    /// Surface-measure weights `|x_{i+1} - x_{i-1}| / 2`. These equal the trapezoidal
    /// weights `(l_{i-1} + l_i) / 2` to second order on smooth curves, and make
    /// `sum_i n_i w_i` vanish exactly on any closed polygon.
    pub fn quadrature_weights(&self) -> Result<Vec<f64>> {
        Ok(self.tangents()?.into_iter().map(Vec2::norm).collect())
    }

    /// `n_i w_i` for every vertex.
    pub fn weighted_normals(&self) -> Result<Vec<Vec2>> {
        Ok(self.tangents()?.into_iter().map(Vec2::rotate_cw).collect())
    }

    /// `sum_i rho_i (v(t, x_i, w) . n_i) w_i`, the discrete outward mass flux.
    pub fn hamiltonian_integral(&self, field: &ControlAffineField, t: f64, w: &[f64]) -> Result<f64> {
        let normals = self.weighted_normals()?;
        let phi = field.weights(t, w);
        let mut sum = 0.0;
        for ((x, rho), nw) in self.vertices.iter().zip(&self.density).zip(&normals) {
            if *rho != 0.0 {
                sum += rho * field.value_weighted(t, *x, &phi).dot(*nw);
            }
        }
        Ok(sum)
    }

    /// Flux of the drift and of every channel separately.
    pub fn flux_coefficients(&self, field: &ControlAffineField, t: f64) -> Result<FluxCoefficients> {
        let normals = self.weighted_normals()?;
        let k = field.n_channels();
        let mut drift = 0.0;
        let mut channels = vec![0.0; k];
        for ((x, rho), nw) in self.vertices.iter().zip(&self.density).zip(&normals) {
            if *rho == 0.0 {
                continue;
            }
            drift += rho * field.drift(t, *x).dot(*nw);
            for (i, c) in channels.iter_mut().enumerate() {
                *c += rho * field.channel(i, t, *x).dot(*nw);
            }
        }
        Ok(FluxCoefficients { drift, channels })
    }

    /// Resample the polygon so that segments are at most `max_segment` long and
    /// consecutive vertices at least `min_segment` apart. Long segments are split into
    /// equal parts with linearly interpolated payload; close vertices are dropped.
    pub fn resample(&self, max_segment: f64, min_segment: f64) -> Result<BoundaryCurve> {
        if !(min_segment > 0.0 && max_segment >= 2.0 * min_segment && max_segment.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "resample thresholds need max >= 2 min > 0 (max = {max_segment}, min = {min_segment})"
            )));
        }
        self.check_oriented()?;

        let mut keep: Vec<usize> = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            match keep.last() {
                Some(&last) if (self.vertices[i] - self.vertices[last]).norm() < min_segment => {}
                _ => keep.push(i),
            }
        }
        while keep.len() > 1 && (self.vertices[*keep.last().unwrap()] - self.vertices[keep[0]]).norm() < min_segment {
            keep.pop();
        }

        let mut out = BoundaryCurve {
            time: self.time,
            vertices: Vec::new(),
            density: Vec::new(),
            jacobian_det: Vec::new(),
        };
        let m = keep.len();
        for (pos, &i) in keep.iter().enumerate() {
            let j = keep[(pos + 1) % m];
            out.vertices.push(self.vertices[i]);
            out.density.push(self.density[i]);
            out.jacobian_det.push(self.jacobian_det[i]);
            let len = (self.vertices[j] - self.vertices[i]).norm();
            if len > max_segment {
                let pieces = (len / max_segment).ceil() as usize;
                for q in 1..pieces {
                    let s = q as f64 / pieces as f64;
                    out.vertices.push(self.vertices[i].lerp(self.vertices[j], s));
                    out.density.push(self.density[i] + s * (self.density[j] - self.density[i]));
                    out.jacobian_det
                        .push(self.jacobian_det[i] + s * (self.jacobian_det[j] - self.jacobian_det[i]));
                }
            }
        }
        if out.len() < 8 {
            return Err(Error::TooFewVertices(out.len()));
        }
        out.check_oriented()?;
        Ok(out)
    }

    /// Rows `t,vertex_index,x1,x2,rho,jac_det` without a header.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (i, x) in self.vertices.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                fmt_num(self.time),
                i,
                fmt_num(x.x),
                fmt_num(x.y),
                fmt_num(self.density[i]),
                fmt_num(self.jacobian_det[i])
            )?;
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str = "t,vertex_index,x1,x2,rho,jac_det";

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        self.write_csv_rows(out)
    }
}

/// Mass of `rho0` inside the counterclockwise polygon, computed as the line integral
/// of `F(x1, x2) dx2` with `F` the partial antiderivative of `rho0` in `x1`
/// (Green's theorem), using the midpoint rule on every segment.
pub fn stokes_mass(vertices: &[Vec2], density: &InitialDensity) -> Result<f64> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::DegenerateCurve(format!("{n} vertices, need at least 3")));
    }
    let area = signed_area(vertices);
    if !(area > 0.0) {
        return Err(Error::Orientation { area });
    }
    let mean_x = vertices.iter().map(|v| v.x).sum::<f64>() / n as f64;
    let lower_tail = density.scale().map_or(true, |(c, _)| mean_x <= c.x);
    let mut sum = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let dy = b.y - a.y;
        if dy != 0.0 {
            let mid = (a + b) * 0.5;
            sum += density.tail_antiderivative(mid.x, mid.y, lower_tail) * dy;
        }
    }
    Ok(sum)
}

impl BoundaryCurve {
    pub fn stokes_mass(&self, density: &InitialDensity) -> Result<f64> {
        stokes_mass(&self.vertices, density)
    }
}
