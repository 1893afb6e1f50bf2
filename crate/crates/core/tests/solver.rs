use std::sync::Arc;

use continuity_control::flow::ControlSignal;
use continuity_control::problem::{
    make_benchmark, ControlAffineField, ControlSet, InitialDensity, Overrides, ProblemInstance, TargetSet,
};
use continuity_control::solver::*;
use continuity_control::{Error, Vec2};

fn coarse(name: &str) -> ProblemInstance {
    make_benchmark(name, &Overrides::new())
        .unwrap()
        .with_time_steps(300)
        .unwrap()
        .with_boundary_pts(120)
        .unwrap()
}

fn run(p: &ProblemInstance, iters: usize) -> SolverState {
    let config = SolverConfig {
        max_iters: iters,
        ..Default::default()
    };
    solve(p, initial_control(p).unwrap(), &config).unwrap()
}

fn assert_monotone(costs: &[f64]) {
    for (k, w) in costs.windows(2).enumerate() {
        assert!(w[1] >= w[0] - 1e-10, "cost fell at iteration {}: {} -> {}", k + 1, w[0], w[1]);
    }
}

#[test]
fn singleton_control_set_is_optimal_immediately() {
    let field = ControlAffineField::new(
        Arc::new(|_, p: Vec2| Vec2::new(p.y, -p.x)),
        vec![Arc::new(|_, _| Vec2::new(1.0, 0.0))],
    );
    let p = ProblemInstance::new(
        field,
        ControlSet::new_box(vec![0.25], vec![0.25]).unwrap(),
        InitialDensity::gaussian(1.0, Vec2::ZERO).unwrap(),
        TargetSet::circle(Vec2::new(1.0, 0.0), 1.0).unwrap(),
        2.0,
        100,
        64,
    )
    .unwrap();
    let state = run(&p, 10);
    assert_eq!(state.iteration, 1);
    assert_eq!(state.termination, Some(Termination::Converged));
    assert_eq!(state.residual, 0.0);
    assert_eq!(optimality_residual(&p, &state).unwrap(), 0.0);
    assert_eq!(state.diagnostics.len(), 1);
    let sweep = gain_profile(&p, &state.control, &state.trajectory).unwrap();
    assert!(sweep.g.values.iter().all(|g| *g == 0.0));
}

#[test]
fn pendulum_improves_monotonically() {
    let p = coarse("pendulum");
    let state = run(&p, 20);
    let costs = state.cost_history();
    assert_monotone(&costs);
    assert!(costs[1] > costs[0]);
    assert_eq!(state.diagnostics.len(), state.iteration);
    assert!(state.iteration <= 20);
    for r in &state.diagnostics {
        assert!(r.needle_measure >= r.epsilon - 1e-12 || r.epsilon == 0.0);
    }
}

#[test]
fn boat_zero_control_is_not_optimal() {
    let p = coarse("boat");
    let u0 = initial_control(&p).unwrap();
    assert!(u0.values().iter().all(|u| u == &[0.0, 0.0]));
    let state = run(&p, 3);
    assert!(state.initial_residual > 0.0);
    assert!(state.diagnostics[0].cost_delta > 0.0);
    assert_monotone(&state.cost_history());
}

#[test]
fn every_benchmark_beats_its_initial_control() {
    for name in ["boat", "pendulum", "sheep"] {
        let p = coarse(name);
        let state = run(&p, 10);
        assert!(state.cost > state.initial_cost, "{name}");
        assert_monotone(&state.cost_history());
    }
}

#[test]
fn sheep_starts_from_the_simplex_center() {
    let p = coarse("sheep");
    let u0 = initial_control(&p).unwrap();
    assert!(u0.values().iter().all(|u| u.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15)));
}

#[test]
fn gains_are_nonnegative() {
    for name in ["boat", "pendulum", "sheep"] {
        let p = coarse(name);
        let u = initial_control(&p).unwrap();
        let eval = evaluate_cost(&p, &u).unwrap();
        let sweep = gain_profile(&p, &u, &eval.trajectory).unwrap();
        assert!(sweep.g.min() >= -1e-9, "{name}: {}", sweep.g.min());
        assert!(sweep.w.values().iter().all(|w| p.controls.contains(w)));
    }
}

#[test]
fn solves_are_bit_reproducible() {
    let p = coarse("sheep");
    let a = run(&p, 5);
    let b = run(&p, 5);
    let bits = |s: &SolverState| s.cost_history().iter().map(|c| c.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.control, b.control);
}

#[test]
fn line_search_needs_a_positive_gain() {
    let p = coarse("pendulum");
    let state = SolverState::initial(&p, initial_control(&p).unwrap()).unwrap();
    let w = state.control.clone();
    let flat = GProfile::new(vec![0.0; p.n_time_steps], p.dt());
    assert!(matches!(
        line_search_epsilon(&p, &state, &w, &flat),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn line_search_returns_the_sentinel_at_a_stall() {
    let p = coarse("pendulum");
    let state = run(&p, 200);
    assert_eq!(state.termination, Some(Termination::NoImprovement), "{:?}", state.termination);
    let sweep = gain_profile(&p, &state.control, &state.trajectory).unwrap();
    let outcome = line_search_epsilon(&p, &state, &sweep.w, &sweep.g).unwrap();
    assert_eq!(outcome.epsilon, 0.0);
    assert_eq!(outcome.cost, state.cost);
    assert_eq!(outcome.signal, state.control);
}

#[test]
fn accepted_moves_match_the_recorded_cost() {
    let p = coarse("pendulum");
    let state = run(&p, 4);
    assert_eq!(cost_only(&p, &state.control).unwrap(), state.cost);
    let last = state.diagnostics.last().unwrap();
    assert_eq!(last.cost, state.cost);
}

#[test]
fn controls_outside_the_set_are_rejected() {
    let p = coarse("pendulum");
    let bad = ControlSignal::constant(p.n_time_steps, p.dt(), &[0.9]).unwrap();
    assert!(cost_only(&p, &bad).is_err());
    let short = ControlSignal::constant(p.n_time_steps - 1, p.dt(), &[0.0]).unwrap();
    assert!(cost_only(&p, &short).is_err());
}
