//! Cost evaluation by backward transport of the target boundary.

use rayon::prelude::*;

use crate::boundary::{stokes_mass, BoundaryCurve};
use crate::error::Result;
use crate::flow::{ControlSignal, Flow};
use crate::geometry::Vec2;
use crate::problem::{ProblemInstance, TargetSet};

/// Cost `J[u]` together with the boundary of `A^t` at every grid node.
#[derive(Debug, Clone)]
pub struct CostEvaluation {
    pub cost: f64,
    /// `trajectory[j]` samples `dA^{t_j}`, `j = 0..=n_time_steps`.
    pub trajectory: Vec<BoundaryCurve>,
}

fn longest_image(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (*q - *p).norm_squared())
        .fold(0.0f64, f64::max)
        .sqrt()
}

/// Backward paths of the refined time-`T` boundary sampling, in boundary order.
fn plan_sampling(problem: &ProblemInstance, flow: &Flow<'_>) -> Result<Vec<Vec<Vec2>>> {
    let target = &problem.target;
    let n = problem.n_boundary_pts;
    let mut params = TargetSet::uniform_parameters(n);
    let mut paths: Vec<Vec<Vec2>> = params
        .par_iter()
        .map(|&theta| flow.backward_path(target.point_at(theta)))
        .collect::<Result<_>>()?;

    let resampling = problem.resampling;
    if !resampling.enabled {
        return Ok(paths);
    }

    let end = problem.n_time_steps;
    let perimeter: f64 = (0..n).map(|i| (paths[(i + 1) % n][end] - paths[i][end]).norm()).sum();
    let max_segment = resampling.max_factor * perimeter / n as f64;
    let budget = n * resampling.max_vertex_factor.max(1);
    // bisection depth of the segment starting at each vertex
    let mut depth = vec![0u32; n];

    loop {
        let m = params.len();
        let mut split: Vec<usize> = (0..m)
            .filter(|&i| {
                depth[i] < resampling.max_depth && longest_image(&paths[i], &paths[(i + 1) % m]) > max_segment
            })
            .collect();
        split.truncate(budget.saturating_sub(m));
        if split.is_empty() {
            break;
        }
        let mids: Vec<f64> = split
            .iter()
            .map(|&i| {
                let next = if i + 1 == m { params[0] + std::f64::consts::TAU } else { params[i + 1] };
                0.5 * (params[i] + next)
            })
            .collect();
        let mut new_paths: Vec<Vec<Vec2>> = mids
            .par_iter()
            .map(|&theta| flow.backward_path(target.point_at(theta)))
            .collect::<Result<_>>()?;

        let mut merged_params = Vec::with_capacity(m + split.len());
        let mut merged_paths = Vec::with_capacity(m + split.len());
        let mut merged_depth = Vec::with_capacity(m + split.len());
        let mut k = 0;
        for (i, path) in paths.into_iter().enumerate() {
            merged_params.push(params[i]);
            merged_paths.push(path);
            if k < split.len() && split[k] == i {
                let d = depth[i] + 1;
                merged_depth.push(d);
                merged_params.push(mids[k]);
                merged_paths.push(std::mem::take(&mut new_paths[k]));
                merged_depth.push(d);
                k += 1;
            } else {
                merged_depth.push(depth[i]);
            }
        }
        params = merged_params;
        paths = merged_paths;
        depth = merged_depth;
    }
    Ok(paths)
}

fn check_signal(problem: &ProblemInstance, signal: &ControlSignal) -> Result<()> {
    signal.validate(&problem.controls, problem.n_time_steps)
}

/// `J[u]` only: positions at `t = 0` of the transported boundary, integrated by Green's theorem.
pub fn cost_only(problem: &ProblemInstance, signal: &ControlSignal) -> Result<f64> {
    check_signal(problem, signal)?;
    let flow = Flow::new(&problem.field, signal, problem.integrator)?;
    let sampling = plan_sampling(problem, &flow)?;
    let start: Vec<Vec2> = sampling.iter().map(|p| p[0]).collect();
    stokes_mass(&start, &problem.density)
}

/// `J[u]` and the full boundary trajectory with densities and Jacobians.
pub fn evaluate_cost(problem: &ProblemInstance, signal: &ControlSignal) -> Result<CostEvaluation> {
    check_signal(problem, signal)?;
    let flow = Flow::new(&problem.field, signal, problem.integrator)?;
    let sampling = plan_sampling(problem, &flow)?;

    let traced: Vec<(Vec<Vec2>, Vec<f64>)> = sampling
        .into_par_iter()
        .map(|positions| {
            let det = flow.jacobian_along(&positions)?;
            Ok((positions, det))
        })
        .collect::<Result<_>>()?;

    let n_nodes = problem.n_time_steps + 1;
    let m = traced.len();
    let rho0: Vec<f64> = traced.iter().map(|(p, _)| problem.density.eval(p[0])).collect();
    let trajectory: Vec<BoundaryCurve> = (0..n_nodes)
        .map(|j| {
            let mut vertices = Vec::with_capacity(m);
            let mut density = Vec::with_capacity(m);
            let mut jacobian_det = Vec::with_capacity(m);
            for ((positions, det), r0) in traced.iter().zip(&rho0) {
                vertices.push(positions[j]);
                density.push(r0 / det[j]);
                jacobian_det.push(det[j]);
            }
            BoundaryCurve {
                time: flow.time(j),
                vertices,
                density,
                jacobian_det,
            }
        })
        .collect();
    let cost = trajectory[0].stokes_mass(&problem.density)?;
    Ok(CostEvaluation { cost, trajectory })
}
