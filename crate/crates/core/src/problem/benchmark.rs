//! Built-in benchmark problems: boat on a river, pendulum, sheep herding with repellers.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use super::{ControlAffineField, ControlSet, InitialDensity, ProblemInstance, ProblemLabel, TargetSet};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Parameter overrides keyed by their configuration names (`field.alpha`, `problem.T`, ...).
pub type Overrides = BTreeMap<String, f64>;

pub const DEFAULT_TIME_STEPS: usize = 1200;
pub const DEFAULT_BOUNDARY_PTS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Boat,
    Pendulum,
    Sheep,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Boat, Benchmark::Pendulum, Benchmark::Sheep];

    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Boat => "boat",
            Benchmark::Pendulum => "pendulum",
            Benchmark::Sheep => "sheep",
        }
    }

    /// Default parameter values, in configuration-key form.
    pub fn defaults(self) -> Overrides {
        let mut p: Vec<(&str, f64)> = vec![
            ("problem.n_time_steps", DEFAULT_TIME_STEPS as f64),
            ("problem.n_boundary_pts", DEFAULT_BOUNDARY_PTS as f64),
            ("density.sigma", 1.0),
            ("density.center_x", 0.0),
            ("density.center_y", 0.0),
        ];
        match self {
            Benchmark::Boat => p.extend([
                ("problem.T", 12.0),
                ("field.alpha", 0.5),
                ("field.beta", 0.5),
                ("control.u_max", 0.75),
                ("target.center_x", -3.0),
                ("target.center_y", 0.0),
                ("target.radius", 1.0),
            ]),
            Benchmark::Pendulum => p.extend([
                ("problem.T", 6.0),
                ("control.u_max", 0.5),
                ("target.center_x", FRAC_PI_2),
                ("target.center_y", 0.0),
                ("target.radius", 1.0),
            ]),
            Benchmark::Sheep => p.extend([
                ("problem.T", 3.0),
                ("field.alpha", 1.0),
                ("field.beta", 5.0),
                ("field.R", 3.0),
                ("field.x0_x", 0.0),
                ("field.x0_y", 0.0),
                ("target.a", 2.0),
                ("target.b", 1.2),
            ]),
        }
        p.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// Keys that exist but may not be changed.
    fn fixed_keys(self) -> &'static [&'static str] {
        match self {
            Benchmark::Sheep => &["control.m", "m"],
            _ => &[],
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "boat" => Ok(Benchmark::Boat),
            "pendulum" => Ok(Benchmark::Pendulum),
            "sheep" => Ok(Benchmark::Sheep),
            _ => Err(Error::UnknownBenchmark(s.to_string())),
        }
    }
}

/// Number of repellers in the sheep problem.
pub const SHEEP_REPELLERS: usize = 6;

/// Build a benchmark problem by name, applying `overrides` on top of the defaults.
pub fn make_benchmark(name: &str, overrides: &Overrides) -> Result<ProblemInstance> {
    let bench: Benchmark = name.parse()?;
    let mut params = bench.defaults();
    for (key, value) in overrides {
        if bench.fixed_keys().contains(&key.as_str()) {
            return Err(Error::FixedParameter { key: key.clone() });
        }
        match params.get_mut(key) {
            Some(slot) => *slot = *value,
            None => return Err(Error::UnknownKey(key.clone())),
        }
    }
    build(bench, params)
}

fn positive(params: &Overrides, key: &str) -> Result<f64> {
    let v = params[key];
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(key, format!("must be positive, got {v}")))
    }
}

fn finite(params: &Overrides, key: &str) -> Result<f64> {
    let v = params[key];
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(key, "must be finite"))
    }
}

fn count(params: &Overrides, key: &str) -> Result<usize> {
    let v = params[key];
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::invalid(key, format!("must be a non-negative integer, got {v}")))
    }
}

fn build(bench: Benchmark, params: Overrides) -> Result<ProblemInstance> {
    let horizon = positive(&params, "problem.T")?;
    let n_time_steps = count(&params, "problem.n_time_steps")?;
    let n_boundary_pts = count(&params, "problem.n_boundary_pts")?;
    let sigma = positive(&params, "density.sigma")?;
    let density_center = Vec2::new(finite(&params, "density.center_x")?, finite(&params, "density.center_y")?);
    let density = InitialDensity::gaussian(sigma, density_center)?;

    let (field, controls, target) = match bench {
        Benchmark::Boat => {
            let alpha = finite(&params, "field.alpha")?;
            let beta = finite(&params, "field.beta")?;
            let u_max = params["control.u_max"];
            let center = Vec2::new(finite(&params, "target.center_x")?, finite(&params, "target.center_y")?);
            (
                boat_field(alpha, beta),
                ControlSet::new_ball(vec![0.0, 0.0], u_max)?,
                TargetSet::circle(center, positive(&params, "target.radius")?)?,
            )
        }
        Benchmark::Pendulum => {
            let u_max = params["control.u_max"];
            if !(u_max >= 0.0) {
                return Err(Error::invalid("control.u_max", "must be >= 0"));
            }
            let center = Vec2::new(finite(&params, "target.center_x")?, finite(&params, "target.center_y")?);
            (
                pendulum_field(),
                ControlSet::interval(u_max)?,
                TargetSet::circle(center, positive(&params, "target.radius")?)?,
            )
        }
        Benchmark::Sheep => {
            let alpha = finite(&params, "field.alpha")?;
            let beta = finite(&params, "field.beta")?;
            let ring = positive(&params, "field.R")?;
            let x0 = Vec2::new(finite(&params, "field.x0_x")?, finite(&params, "field.x0_y")?);
            (
                sheep_field(alpha, beta, ring, x0, SHEEP_REPELLERS),
                ControlSet::new_simplex(SHEEP_REPELLERS)?,
                TargetSet::ellipse(x0, positive(&params, "target.a")?, positive(&params, "target.b")?)?,
            )
        }
    };

    let problem = ProblemInstance::new(field, controls, density, target, horizon, n_time_steps, n_boundary_pts)?;
    Ok(problem.with_label(ProblemLabel {
        name: bench.name().to_string(),
        params,
    }))
}

/// River current `(alpha + exp(-beta x2^2), 0)` plus free rowing velocity `u` in the plane.
pub fn boat_field(alpha: f64, beta: f64) -> ControlAffineField {
    ControlAffineField::new(
        Arc::new(move |_, x: Vec2| Vec2::new(alpha + (-beta * x.y * x.y).exp(), 0.0)),
        vec![
            Arc::new(|_, _| Vec2::new(1.0, 0.0)),
            Arc::new(|_, _| Vec2::new(0.0, 1.0)),
        ],
    )
    .with_analytic_divergence(Arc::new(|_, _| 0.0), vec![Arc::new(|_, _| 0.0), Arc::new(|_, _| 0.0)])
    .expect("channel count matches")
}

/// Pendulum drift `(x2, cos x1)` with a horizontal force channel.
pub fn pendulum_field() -> ControlAffineField {
    ControlAffineField::new(
        Arc::new(|_, x: Vec2| Vec2::new(x.y, x.x.cos())),
        vec![Arc::new(|_, _| Vec2::new(1.0, 0.0))],
    )
    .with_analytic_divergence(Arc::new(|_, _| 0.0), vec![Arc::new(|_, _| 0.0)])
    .expect("channel count matches")
}

/// Repeller positions `R (cos(2 pi k / m), sin(2 pi k / m))`, `k = 0..m`.
pub fn repeller_positions(ring: f64, m: usize) -> Vec<Vec2> {
    (0..m)
        .map(|k| {
            let a = TAU * k as f64 / m as f64;
            Vec2::new(ring * a.cos(), ring * a.sin())
        })
        .collect()
}

/// Outward push `alpha (x - x0) / sqrt(1 + |x - x0|^2)` and repellers
/// `beta exp(-|x - x_k|^4) (x - x_k)`.
pub fn sheep_field(alpha: f64, beta: f64, ring: f64, x0: Vec2, m: usize) -> ControlAffineField {
    let repellers = repeller_positions(ring, m);
    let channels = repellers
        .iter()
        .map(|&xk| -> super::VectorFn {
            Arc::new(move |_, x: Vec2| {
                let d = x - xk;
                let r2 = d.norm_squared();
                d * (beta * (-r2 * r2).exp())
            })
        })
        .collect();
    let channel_divs = repellers
        .iter()
        .map(|&xk| -> super::ScalarFieldFn {
            Arc::new(move |_, x: Vec2| {
                let r2 = (x - xk).norm_squared();
                let r4 = r2 * r2;
                beta * (-r4).exp() * (2.0 - 4.0 * r4)
            })
        })
        .collect();
    ControlAffineField::new(
        Arc::new(move |_, x: Vec2| {
            let d = x - x0;
            d * (alpha / (1.0 + d.norm_squared()).sqrt())
        }),
        channels,
    )
    .with_analytic_divergence(
        Arc::new(move |_, x: Vec2| {
            let s2 = (x - x0).norm_squared();
            alpha * (2.0 + s2) / (1.0 + s2).powf(1.5)
        }),
        channel_divs,
    )
    .expect("channel count matches")
}
