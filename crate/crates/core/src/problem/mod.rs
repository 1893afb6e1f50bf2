//! Problem data: controlled field, admissible controls, initial density, target and discretization.

mod benchmark;
mod config;
mod control_set;
mod density;
mod field;
mod target;

use std::collections::BTreeMap;

pub use benchmark::{make_benchmark, Benchmark, Overrides};
pub use config::{parse_problem_config, ProblemConfig};
pub use control_set::{ControlSet, SET_TOL};
pub use density::{AntiderivativeFn, DensityFn, InitialDensity, QUADRATURE_INTERVALS};
pub use field::{
    ChannelMapFn, ChannelMaps, ControlAffineField, Divergence, ScalarFieldFn, VectorFn, DEFAULT_DIV_STEP,
};
pub use target::TargetSet;

use crate::error::{Error, Result};

/// Characteristic integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// First order; kept for comparison runs.
    Euler,
    /// Second-order Heun (explicit trapezoid).
    #[default]
    Heun,
}

impl std::str::FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" => Ok(Integrator::Euler),
            "heun" | "rk2" => Ok(Integrator::Heun),
            _ => Err(Error::invalid("problem.integrator", format!("unknown integrator `{s}`"))),
        }
    }
}

impl std::fmt::Display for Integrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Integrator::Euler => "euler",
            Integrator::Heun => "heun",
        })
    }
}

/// Adaptive refinement of the time-`T` boundary sampling.
///
/// A first backward trace measures how much every boundary segment stretches over
/// `[0, T]`; segments whose longest image exceeds `max_factor` times the initial mean
/// segment are bisected in boundary parameter, tracing each new vertex, until every
/// image is short enough or `max_depth` bisections were spent on the segment. The total
/// vertex count is capped at `max_vertex_factor` times the base count. Every vertex
/// therefore stays an exact characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resampling {
    pub enabled: bool,
    pub max_factor: f64,
    pub min_factor: f64,
    pub max_depth: u32,
    pub max_vertex_factor: usize,
}

impl Default for Resampling {
    fn default() -> Self {
        Resampling {
            enabled: true,
            max_factor: 4.0,
            min_factor: 0.25,
            max_depth: 10,
            max_vertex_factor: 16,
        }
    }
}

impl Resampling {
    pub fn disabled() -> Self {
        Resampling {
            enabled: false,
            ..Default::default()
        }
    }
}

/// Human-readable provenance of a problem: its name and every resolved parameter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemLabel {
    pub name: String,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub field: ControlAffineField,
    pub controls: ControlSet,
    pub density: InitialDensity,
    pub target: TargetSet,
    pub horizon: f64,
    pub n_time_steps: usize,
    pub n_boundary_pts: usize,
    pub integrator: Integrator,
    pub resampling: Resampling,
    pub label: ProblemLabel,
}

impl ProblemInstance {
    pub fn new(
        field: ControlAffineField,
        controls: ControlSet,
        density: InitialDensity,
        target: TargetSet,
        horizon: f64,
        n_time_steps: usize,
        n_boundary_pts: usize,
    ) -> Result<Self> {
        let p = ProblemInstance {
            field,
            controls,
            density,
            target,
            horizon,
            n_time_steps,
            n_boundary_pts,
            integrator: Integrator::default(),
            resampling: Resampling::default(),
            label: ProblemLabel {
                name: "custom".into(),
                params: BTreeMap::new(),
            },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("problem.T", "horizon must be positive"));
        }
        if self.n_time_steps < 2 {
            return Err(Error::invalid("problem.n_time_steps", "need at least 2 time steps"));
        }
        if self.n_boundary_pts < 8 {
            return Err(Error::invalid("problem.n_boundary_pts", "need at least 8 boundary points"));
        }
        if self.controls.dim() != self.field.control_dim() {
            return Err(Error::invalid(
                "control",
                format!(
                    "control set has dimension {} but the field expects {}",
                    self.controls.dim(),
                    self.field.control_dim()
                ),
            ));
        }
        let r = self.resampling;
        if r.enabled && !(r.max_factor > 0.0 && r.min_factor > 0.0 && r.max_factor >= 2.0 * r.min_factor) {
            return Err(Error::invalid("resampling", "need max_factor >= 2 min_factor > 0"));
        }
        Ok(())
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_resampling(mut self, resampling: Resampling) -> Result<Self> {
        self.resampling = resampling;
        self.validate()?;
        Ok(self)
    }

    pub fn with_time_steps(mut self, n: usize) -> Result<Self> {
        self.n_time_steps = n;
        self.label.params.insert("problem.n_time_steps".into(), n as f64);
        self.validate()?;
        Ok(self)
    }

    pub fn with_boundary_pts(mut self, n: usize) -> Result<Self> {
        self.n_boundary_pts = n;
        self.label.params.insert("problem.n_boundary_pts".into(), n as f64);
        self.validate()?;
        Ok(self)
    }

    pub fn with_label(mut self, label: ProblemLabel) -> Self {
        self.label = label;
        self
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_time_steps as f64
    }

    /// Grid node `t_j = j dt`.
    pub fn time(&self, j: usize) -> f64 {
        if j == self.n_time_steps {
            self.horizon
        } else {
            j as f64 * self.dt()
        }
    }

    pub fn control_dim(&self) -> usize {
        self.controls.dim()
    }
}
