//! Independent cost estimates that transport mass forward instead of the target backward.
//! Used for validation only.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{ControlSignal, Flow};
use crate::geometry::Vec2;
use crate::problem::{InitialDensity, ProblemInstance};

/// Samples drawn from one RNG stream.
pub const MC_BLOCK: usize = 8192;
pub const MIN_MC_SAMPLES: usize = 1000;
pub const MIN_GRID_CELLS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    /// Binomial standard error; zero for deterministic quadrature.
    pub std_error: f64,
    pub n_samples: usize,
}

/// Probability that a `rho0`-distributed particle, advected forward over `[0, T]`,
/// ends inside the target.
///
/// Samples come in blocks of [`MC_BLOCK`]; block `b` draws from a ChaCha8 generator
/// seeded with `seed` on stream `b`, with normal deviates from `rand_distr`'s
/// `StandardNormal`. The estimate is thus independent of thread count.
pub fn mc_cost(problem: &ProblemInstance, signal: &ControlSignal, n_samples: usize, seed: u64) -> Result<OracleEstimate> {
    let (center, sigma) = match problem.density {
        InitialDensity::Gaussian { sigma, center } => (center, sigma),
        InitialDensity::Custom { .. } => {
            return Err(Error::Unsupported(
                "Monte-Carlo sampling needs a Gaussian initial density".into(),
            ))
        }
    };
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {n_samples}"
        )));
    }
    signal.validate(&problem.controls, problem.n_time_steps)?;
    let flow = Flow::new(&problem.field, signal, problem.integrator)?;
    let end = problem.n_time_steps;
    let n_blocks = n_samples.div_ceil(MC_BLOCK);

    let hits: Vec<u64> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = MC_BLOCK.min(n_samples - b * MC_BLOCK);
            let mut inside = 0u64;
            for _ in 0..count {
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                let x0 = center + Vec2::new(dx, dy) * sigma;
                let x = flow.advect(0, end, x0)?;
                if problem.target.contains(x) {
                    inside += 1;
                }
            }
            Ok(inside)
        })
        .collect::<Result<_>>()?;

    let total: u64 = hits.iter().sum();
    let p = total as f64 / n_samples as f64;
    Ok(OracleEstimate {
        value: p,
        std_error: (p * (1.0 - p) / n_samples as f64).sqrt(),
        n_samples,
    })
}

/// Midpoint quadrature of `rho0(x) 1[Phi_{0,T}(x) in A]` over the square of half-width
/// `half_width` around the density center, with `n_cells` cells per axis.
pub fn grid_cost(problem: &ProblemInstance, signal: &ControlSignal, half_width: f64, n_cells: usize) -> Result<f64> {
    if n_cells < MIN_GRID_CELLS {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_GRID_CELLS} cells per axis, got {n_cells}"
        )));
    }
    let center = match problem.density.scale() {
        Some((center, sigma)) => {
            if half_width < 6.0 * sigma {
                return Err(Error::InvalidArgument(format!(
                    "grid half-width {half_width} does not cover 6 sigma = {}",
                    6.0 * sigma
                )));
            }
            center
        }
        None => Vec2::ZERO,
    };
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::InvalidArgument("grid half-width must be positive".into()));
    }
    signal.validate(&problem.controls, problem.n_time_steps)?;
    let flow = Flow::new(&problem.field, signal, problem.integrator)?;
    let end = problem.n_time_steps;
    let h = 2.0 * half_width / n_cells as f64;

    let rows: Vec<f64> = (0..n_cells)
        .into_par_iter()
        .map(|iy| {
            let y = center.y - half_width + (iy as f64 + 0.5) * h;
            let mut row = 0.0;
            for ix in 0..n_cells {
                let x0 = Vec2::new(center.x - half_width + (ix as f64 + 0.5) * h, y);
                let rho = problem.density.eval(x0);
                if rho == 0.0 {
                    continue;
                }
                if problem.target.contains(flow.advect(0, end, x0)?) {
                    row += rho;
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(rows.iter().sum::<f64>() * h * h)
}
