//! Needle-linearization iteration.
//!
//! Each iteration computes, from the current boundary trajectory, the pointwise
//! flux-minimizing control `w`, the gain profile `g`, and then tries needle
//! variations on super-level sets of `g` of geometrically shrinking measure,
//! keeping the best one that strictly increases the cost.

mod argmin;
mod cost;
mod needle;

use std::time::Instant;

pub use argmin::{argmin_from_coefficients, pointwise_argmin};
pub use cost::{cost_only, evaluate_cost, CostEvaluation};
pub use needle::{mix_controls, needle_select, needle_steps, GProfile, NeedleSet};

use rayon::prelude::*;

use crate::boundary::{BoundaryCurve, FluxCoefficients};
use crate::error::{Error, Result};
use crate::flow::ControlSignal;
use crate::problem::ProblemInstance;

/// Residual tolerance for the necessary-condition stopping rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualTolerance {
    /// Multiple of the residual of the initial control.
    Relative(f64),
    Absolute(f64),
}

impl ResidualTolerance {
    pub fn resolve(self, initial_residual: f64) -> f64 {
        match self {
            ResidualTolerance::Relative(f) => f * initial_residual.max(0.0),
            ResidualTolerance::Absolute(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol_g: ResidualTolerance,
    pub tol_improve: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 50,
            tol_g: ResidualTolerance::Relative(1e-6),
            tol_improve: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `max_j g_j <= tol_g`: the discrete necessary condition holds.
    Converged,
    /// No needle variation on the line-search grid increased the cost.
    NoImprovement,
    /// The accepted increase was below `tol_improve`.
    Stalled,
    IterationLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::NoImprovement => "no_improvement",
            Termination::Stalled => "stalled",
            Termination::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Residual `max_j g_j` of the control entering this iteration.
    pub max_g: f64,
    /// Accepted needle measure target; 0 when no move was made.
    pub epsilon: f64,
    pub needle_measure: f64,
    /// Cost after the iteration.
    pub cost: f64,
    pub cost_delta: f64,
    pub wall_time_ms: f64,
}

/// Pointwise minimizer `w` and gain profile for one control.
#[derive(Debug, Clone)]
pub struct GainSweep {
    pub w: ControlSignal,
    pub g: GProfile,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub control: ControlSignal,
    pub cost: f64,
    pub iteration: usize,
    pub trajectory: Vec<BoundaryCurve>,
    pub diagnostics: Vec<IterationRecord>,
    /// Residual of `control`.
    pub residual: f64,
    pub initial_cost: f64,
    pub initial_residual: f64,
    pub termination: Option<Termination>,
}

impl SolverState {
    /// State for `u0` before any iteration.
    pub fn initial(problem: &ProblemInstance, u0: ControlSignal) -> Result<Self> {
        let eval = evaluate_cost(problem, &u0)?;
        Ok(SolverState {
            control: u0,
            cost: eval.cost,
            iteration: 0,
            trajectory: eval.trajectory,
            diagnostics: Vec::new(),
            residual: f64::NAN,
            initial_cost: eval.cost,
            initial_residual: f64::NAN,
            termination: None,
        })
    }

    /// Cost after every iteration, starting with the initial cost.
    pub fn cost_history(&self) -> Vec<f64> {
        std::iter::once(self.initial_cost)
            .chain(self.diagnostics.iter().map(|r| r.cost))
            .collect()
    }
}

/// `w` and `g` for `signal` from its boundary trajectory, one sweep over all steps.
/// Where the candidate search of non-coordinate channel maps does not beat `u_j`,
/// `w_j = u_j` so that `g_j >= 0` always.
pub fn gain_profile(
    problem: &ProblemInstance,
    signal: &ControlSignal,
    trajectory: &[BoundaryCurve],
) -> Result<GainSweep> {
    let n = problem.n_time_steps;
    if trajectory.len() != n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            actual: trajectory.len(),
        });
    }
    let field = &problem.field;
    let mut w_values = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    // step j acts on [t_j, t_{j+1}]: trapezoidal average of the endpoint fluxes
    let nodes: Vec<FluxCoefficients> = trajectory
        .par_iter()
        .enumerate()
        .map(|(j, curve)| curve.flux_coefficients(field, problem.time(j)))
        .collect::<Result<_>>()?;
    for (j, pair) in nodes.windows(2).enumerate() {
        let t = problem.time(j);
        let coefficients = FluxCoefficients {
            drift: 0.5 * (pair[0].drift + pair[1].drift),
            channels: pair[0].channels.iter().zip(&pair[1].channels).map(|(a, b)| 0.5 * (a + b)).collect(),
        };
        let u = signal.step(j);
        let mut w = argmin_from_coefficients(&coefficients, field, &problem.controls, t);
        let h_u = coefficients.control_part(&field.weights(t, u));
        let mut h_w = coefficients.control_part(&field.weights(t, &w));
        if !field.has_coordinate_maps() && h_w > h_u {
            w = u.to_vec();
            h_w = h_u;
        }
        g.push(h_u - h_w);
        w_values.push(w);
    }
    Ok(GainSweep {
        w: ControlSignal::new(w_values, signal.dt())?,
        g: GProfile::new(g, problem.dt()),
    })
}

/// Largest gain over the grid, clamped at zero. Zero certifies the discrete
/// pointwise minimum condition.
pub fn optimality_residual(problem: &ProblemInstance, state: &SolverState) -> Result<f64> {
    let sweep = gain_profile(problem, &state.control, &state.trajectory)?;
    Ok(sweep.g.max().max(0.0))
}

#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    /// Accepted needle measure target, or 0 when nothing improved.
    pub epsilon: f64,
    pub needle_measure: f64,
    pub cost: f64,
    pub signal: ControlSignal,
}

/// Needle measures `T, T/2, T/4, ...` down to `dt` (with `dt` itself last).
pub fn epsilon_grid(horizon: f64, dt: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut eps = horizon;
    while eps >= dt * (1.0 - 1e-12) {
        grid.push(eps);
        eps *= 0.5;
    }
    if grid.last().is_some_and(|last| *last > dt * (1.0 + 1e-12)) {
        grid.push(dt);
    }
    grid
}

/// Best needle variation on the geometric `epsilon` grid. Returns the current control
/// with `epsilon = 0` when no grid point strictly increases the cost.
pub fn line_search_epsilon(
    problem: &ProblemInstance,
    state: &SolverState,
    w: &ControlSignal,
    g: &GProfile,
) -> Result<LineSearchOutcome> {
    if !(g.max() > 0.0) {
        return Err(Error::Precondition(
            "gain profile has no positive entry; the control already satisfies the minimum condition".into(),
        ));
    }
    let mut best = LineSearchOutcome {
        epsilon: 0.0,
        needle_measure: 0.0,
        cost: state.cost,
        signal: state.control.clone(),
    };
    let mut last_count = usize::MAX;
    for eps in epsilon_grid(problem.horizon, problem.dt()) {
        let count = needle_steps(eps, g.dt, g.len());
        if count == last_count {
            continue;
        }
        last_count = count;
        let set = needle_select(g, eps)?;
        let candidate = mix_controls(&state.control, w, &set)?;
        let cost = cost_only(problem, &candidate)?;
        if cost > best.cost {
            best = LineSearchOutcome {
                epsilon: eps,
                needle_measure: set.measure,
                cost,
                signal: candidate,
            };
        }
    }
    Ok(best)
}

/// Run the needle-linearization iteration from `u0`.
pub fn solve(problem: &ProblemInstance, u0: ControlSignal, config: &SolverConfig) -> Result<SolverState> {
    let mut state = SolverState::initial(problem, u0)?;
    let mut sweep = gain_profile(problem, &state.control, &state.trajectory)?;
    state.initial_residual = sweep.g.max().max(0.0);
    state.residual = state.initial_residual;
    let tol_g = config.tol_g.resolve(state.initial_residual);

    for iteration in 1..=config.max_iters {
        let started = Instant::now();
        let max_g = sweep.g.max().max(0.0);
        let mut record = IterationRecord {
            iteration,
            max_g,
            epsilon: 0.0,
            needle_measure: 0.0,
            cost: state.cost,
            cost_delta: 0.0,
            wall_time_ms: 0.0,
        };
        state.iteration = iteration;

        if max_g <= tol_g {
            record.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
            state.diagnostics.push(record);
            state.termination = Some(Termination::Converged);
            return Ok(state);
        }

        let step = line_search_epsilon(problem, &state, &sweep.w, &sweep.g)?;
        if step.epsilon == 0.0 {
            record.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
            state.diagnostics.push(record);
            state.termination = Some(Termination::NoImprovement);
            return Ok(state);
        }

        let eval = evaluate_cost(problem, &step.signal)?;
        let delta = eval.cost - state.cost;
        state.control = step.signal;
        state.cost = eval.cost;
        state.trajectory = eval.trajectory;
        sweep = gain_profile(problem, &state.control, &state.trajectory)?;
        state.residual = sweep.g.max().max(0.0);

        record.epsilon = step.epsilon;
        record.needle_measure = step.needle_measure;
        record.cost = state.cost;
        record.cost_delta = delta;
        record.wall_time_ms = started.elapsed().as_secs_f64() * 1e3;
        state.diagnostics.push(record);

        if delta <= config.tol_improve {
            state.termination = Some(Termination::Stalled);
            return Ok(state);
        }
    }
    state.termination = Some(Termination::IterationLimit);
    Ok(state)
}

/// Default starting control: the center of the control set at every step (zero for the
/// boat and pendulum, the uniform simplex point for the sheep).
pub fn initial_control(problem: &ProblemInstance) -> Result<ControlSignal> {
    ControlSignal::constant(problem.n_time_steps, problem.dt(), &problem.controls.center())
}
