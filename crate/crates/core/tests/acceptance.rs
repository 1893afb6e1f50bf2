//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use continuity_control::boundary::stokes_mass;
use continuity_control::cli::validate_control;
use continuity_control::flow::{ControlSignal, Flow};
use continuity_control::oracle::{grid_cost, mc_cost};
use continuity_control::problem::{
    make_benchmark, ControlAffineField, ControlSet, InitialDensity, Overrides, ProblemInstance, TargetSet,
};
use continuity_control::solver::*;
use continuity_control::Vec2;

const BENCHMARKS: [&str; 3] = ["boat", "pendulum", "sheep"];
const ITERATIONS: usize = 20;
const MONOTONE_TOL: f64 = 1e-10;
const TIME_BUDGET_S: f64 = 60.0;
const MC_SAMPLES: usize = 1_000_000;
const GRID_CELLS: usize = 512;
const CLOSED_FORM_TOL: f64 = 1e-3;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

struct Solved {
    name: &'static str,
    problem: ProblemInstance,
    u0: ControlSignal,
    state: SolverState,
    seconds: f64,
}

fn solve_benchmarks() -> Vec<Solved> {
    BENCHMARKS
        .iter()
        .map(|&name| {
            let problem = make_benchmark(name, &Overrides::new()).unwrap();
            assert_eq!((problem.n_time_steps, problem.n_boundary_pts), (1200, 400));
            let u0 = initial_control(&problem).unwrap();
            let config = SolverConfig {
                max_iters: ITERATIONS,
                ..Default::default()
            };
            let started = Instant::now();
            let state = solve(&problem, u0.clone(), &config).unwrap();
            Solved {
                name,
                problem,
                u0,
                state,
                seconds: started.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

fn monotone(runs: &[Solved]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        let costs = run.state.cost_history();
        let worst = costs.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
        let ok = worst <= MONOTONE_TOL && run.seconds <= TIME_BUDGET_S;
        pass &= ok;
        parts.push(format!(
            "{} {:.6}->{:.6} in {} its, worst drop {:.1e}, {:.1}s",
            run.name,
            run.state.initial_cost,
            run.state.cost,
            run.state.iteration,
            worst.max(0.0),
            run.seconds
        ));
    }
    verdict(pass, parts.join("; "))
}

fn cross_validation(runs: &[Solved]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for run in runs {
        let final_stokes = stokes_mass(&run.state.trajectory[0].vertices, &run.problem.density).unwrap();
        for (label, signal, stokes) in [
            ("u0", &run.u0, run.state.initial_cost),
            ("final", &run.state.control, final_stokes),
        ] {
            let v = validate_control(&run.problem, signal, stokes, MC_SAMPLES, 0, GRID_CELLS).unwrap();
            let ok = v.mc_pass() && v.grid_pass();
            pass &= ok;
            parts.push(format!(
                "{} {label}: |s-mc| {:.1e} (tol {:.1e}), |s-grid| {:.1e}",
                run.name,
                (v.stokes - v.mc).abs(),
                v.mc_tolerance(),
                (v.stokes - v.grid).abs()
            ));
        }
    }
    verdict(pass, parts.join("; "))
}

fn identity_problem() -> ProblemInstance {
    let field = ControlAffineField::new(Arc::new(|_, _| Vec2::ZERO), vec![Arc::new(|_, _| Vec2::ZERO)])
        .with_analytic_divergence(Arc::new(|_, _| 0.0), vec![Arc::new(|_, _| 0.0)])
        .unwrap();
    ProblemInstance::new(
        field,
        ControlSet::new_box(vec![0.0], vec![0.0]).unwrap(),
        InitialDensity::gaussian(1.0, Vec2::ZERO).unwrap(),
        TargetSet::circle(Vec2::ZERO, 1.0).unwrap(),
        1.0,
        10,
        400,
    )
    .unwrap()
}

fn closed_form() -> Verdict {
    let exact = 1.0 - (-0.5f64).exp();
    let p = identity_problem();
    let u = ControlSignal::constant(p.n_time_steps, p.dt(), &[0.0]).unwrap();
    let stokes = cost_only(&p, &u).unwrap();
    let mc = mc_cost(&p, &u, MC_SAMPLES, 0).unwrap().value;
    let grid = grid_cost(&p, &u, 6.0, GRID_CELLS).unwrap();
    let errs = [stokes - exact, mc - exact, grid - exact].map(f64::abs);
    verdict(
        errs.iter().all(|e| *e <= CLOSED_FORM_TOL),
        format!("errors stokes {:.1e}, mc {:.1e}, grid {:.1e}", errs[0], errs[1], errs[2]),
    )
}

fn determinants() -> Verdict {
    let steps = 200;
    let dt = 1.0 / steps as f64;
    let field = ControlAffineField::new(Arc::new(|_, x: Vec2| x), vec![Arc::new(|_, _| Vec2::ZERO)])
        .with_analytic_divergence(Arc::new(|_, _| 2.0), vec![Arc::new(|_, _| 0.0)])
        .unwrap();
    let u = ControlSignal::constant(steps, dt, &[0.0]).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for integrator in [Integrator::Euler, Integrator::Heun] {
        let flow = Flow::new(&field, &u, integrator).unwrap();
        let path = flow.forward_path(Vec2::new(0.3, -0.2)).unwrap();
        let det = *flow.jacobian_along(&path).unwrap().last().unwrap();
        let rel = (det - 1f64.exp().powi(2)).abs() / 1f64.exp().powi(2);
        pass &= rel <= 2.0 * dt;
        parts.push(format!("linear {integrator}: rel {rel:.1e} (tol {:.1e})", 2.0 * dt));
    }
    let pendulum = make_benchmark("pendulum", &Overrides::new()).unwrap();
    let u = initial_control(&pendulum).unwrap();
    let eval = evaluate_cost(&pendulum, &u).unwrap();
    let worst = eval
        .trajectory
        .iter()
        .flat_map(|c| c.jacobian_det.iter())
        .map(|d| (d - 1.0).abs())
        .fold(0.0f64, f64::max);
    pass &= worst <= 1e-12;
    parts.push(format!("pendulum max |det-1| {worst:.1e}"));
    verdict(pass, parts.join("; "))
}

use continuity_control::problem::Integrator;

fn increment_remainder() -> Verdict {
    let p = make_benchmark("pendulum", &Overrides::new()).unwrap();
    let u = initial_control(&p).unwrap();
    let eval = evaluate_cost(&p, &u).unwrap();
    let sweep = gain_profile(&p, &u, &eval.trajectory).unwrap();
    let ratios: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|f| {
            let eps = f * p.horizon;
            let set = needle_select(&sweep.g, eps).unwrap();
            let mixed = mix_controls(&u, &sweep.w, &set).unwrap();
            let delta = cost_only(&p, &mixed).unwrap() - eval.cost;
            (delta - sweep.g.integral(&set)).abs() / eps
        })
        .collect();
    verdict(
        ratios[1] < ratios[0] && ratios[2] < ratios[1],
        format!("R/eps = {:.3e}, {:.3e}, {:.3e}", ratios[0], ratios[1], ratios[2]),
    )
}

fn needle_optimality() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 240;
    let dt = 0.025;
    let mut beaten = 0usize;
    for _ in 0..10 {
        let g: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let profile = GProfile::new(g, dt);
        let k = rng.random_range(1..n);
        let chosen = needle_select(&profile, k as f64 * dt).unwrap();
        let best = profile.integral(&chosen);
        for _ in 0..1000 {
            let mut mask = vec![false; n];
            for j in sample(&mut rng, n, chosen.count()) {
                mask[j] = true;
            }
            if profile.integral(&NeedleSet::from_mask(mask, dt)) > best {
                beaten += 1;
            }
        }
    }
    verdict(beaten == 0, format!("{beaten} of 10000 random sets beat the selection"))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn argmin_closed_forms() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lo = [-1.0, 0.0, -0.5];
    let hi = [1.0, 2.0, 0.5];
    let boxed = ControlSet::new_box(lo.to_vec(), hi.to_vec()).unwrap();
    let center = [0.5, -0.5];
    let radius = 0.75;
    let ball = ControlSet::new_ball(center.to_vec(), radius).unwrap();
    let simplex = ControlSet::new_simplex(6).unwrap();
    let mut failures = [0usize; 4];
    for _ in 0..10_000 {
        let c3: Vec<f64> = (0..3).map(|_| rng.random_range(-10.0..10.0)).collect();
        let w = boxed.linear_argmin(&c3);
        for _ in 0..100 {
            let p: Vec<f64> = (0..3).map(|i| rng.random_range(lo[i]..=hi[i])).collect();
            failures[0] += usize::from(!boxed.contains(&w) || dot(&c3, &w) > dot(&c3, &p) + 1e-12);
        }

        let c2: Vec<f64> = (0..2).map(|_| rng.random_range(-10.0..10.0)).collect();
        let w = ball.linear_argmin(&c2);
        for _ in 0..100 {
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let r = radius * rng.random::<f64>().sqrt();
            let p = [center[0] + r * angle.cos(), center[1] + r * angle.sin()];
            failures[1] += usize::from(!ball.contains(&w) || dot(&c2, &w) > dot(&c2, &p) + 1e-12);
        }

        // integer costs so that ties occur and exercise the earliest-index rule
        let c6: Vec<f64> = (0..6).map(|_| f64::from(rng.random_range(-3i32..=3))).collect();
        let w = simplex.linear_argmin(&c6);
        for _ in 0..100 {
            let e: Vec<f64> = (0..6).map(|_| Exp1.sample(&mut rng)).collect();
            let s: f64 = e.iter().sum();
            let p: Vec<f64> = e.iter().map(|x| x / s).collect();
            failures[2] += usize::from(dot(&c6, &w) > dot(&c6, &p) + 1e-12);
        }
        let k = (0..6).fold(0, |k, i| if c6[i] < c6[k] { i } else { k });
        let mut vertex = vec![0.0; 6];
        vertex[k] = 1.0;
        failures[3] += usize::from(w != vertex);
    }
    verdict(
        failures.iter().all(|f| *f == 0),
        format!(
            "violations box {}, ball {}, simplex {}, vertex rule {}",
            failures[0], failures[1], failures[2], failures[3]
        ),
    )
}

fn residual_condition() -> Verdict {
    let p = make_benchmark("pendulum", &Overrides::new()).unwrap();
    let config = SolverConfig {
        max_iters: 500,
        ..Default::default()
    };
    let state = solve(&p, initial_control(&p).unwrap(), &config).unwrap();
    let tol_g = config.tol_g.resolve(state.initial_residual);
    let residual = optimality_residual(&p, &state).unwrap();
    let pendulum_ok = residual <= tol_g;

    let mut singleton = identity_problem();
    singleton.controls = ControlSet::new_box(vec![0.25], vec![0.25]).unwrap();
    let s = solve(&singleton, initial_control(&singleton).unwrap(), &SolverConfig::default()).unwrap();
    let singleton_ok = s.iteration == 1 && s.residual == 0.0;

    verdict(
        pendulum_ok && singleton_ok,
        format!(
            "pendulum: {} after {} its, residual {:.3e} vs tol_g {:.3e} (initial {:.3e}); singleton: residual {} at iteration {}",
            state.termination.map_or("none", |t| t.as_str()),
            state.iteration,
            residual,
            tol_g,
            state.initial_residual,
            s.residual,
            s.iteration
        ),
    )
}

fn cli_run(out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_continuity-control"))
        .args(["run", "--benchmark", "pendulum", "--iters", "5", "--seed", "3", "--validate"])
        .args(["--mc-samples", "100000", "--grid-cells", "128", "--out"])
        .arg(out)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir.join("frames"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files.push(dir.join("convergence.csv"));
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    if !(cli_run(a.path()) && cli_run(b.path())) {
        return verdict(false, "cli run failed");
    }
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    let same = ta == tb;
    verdict(same, format!("{} files compared, identical: {same}", ta.len()))
}

fn main() {
    let runs = solve_benchmarks();
    let criteria: Vec<(&str, Box<dyn Fn() -> Verdict + '_>)> = vec![
        ("monotone improvement", Box::new(|| monotone(&runs))),
        ("evaluator cross-validation", Box::new(|| cross_validation(&runs))),
        ("closed-form identity mass", Box::new(closed_form)),
        ("jacobian determinant", Box::new(determinants)),
        ("increment remainder", Box::new(increment_remainder)),
        ("needle-set optimality", Box::new(needle_optimality)),
        ("argmin closed forms", Box::new(argmin_closed_forms)),
        ("necessary-condition residual", Box::new(residual_condition)),
        ("determinism", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += usize::from(!v.pass);
        println!("{} {}. {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
