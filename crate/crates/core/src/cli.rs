//! Command-line front end: `run`, `baseline` and `regress`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use crate::bench::{self, BaselineSettings};
use crate::boundary::{stokes_mass, BoundaryCurve};
use crate::error::{Error, Result};
use crate::flow::ControlSignal;
use crate::oracle::{grid_cost, mc_cost};
use crate::output::{fmt_num, Bounds, FrameSvg};
use crate::problem::{make_benchmark, parse_problem_config, Benchmark, Integrator, Overrides, ProblemInstance};
use crate::solver::{initial_control, solve, ResidualTolerance, SolverConfig, SolverState};

/// `|stokes - mc| <= max(MC_SE_FACTOR * SE, MC_FLOOR)`
pub const MC_SE_FACTOR: f64 = 3.0;
pub const MC_FLOOR: f64 = 1e-2;
/// `|stokes - grid| <= GRID_TOL`
pub const GRID_TOL: f64 = 5e-3;

#[derive(Debug, Parser)]
#[command(name = "continuity-control", version, about = "Maximize the mass a controlled flow carries into a target set")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write frames, control, convergence log and summary.
    Run(RunArgs),
    /// Regenerate regression baselines.
    Baseline(BaselineArgs),
    /// Rerun benchmarks and compare against stored baselines.
    Regress(RegressArgs),
}

#[derive(Debug, Clone, Args)]
#[command(group = clap::ArgGroup::new("problem").required(true).args(["benchmark", "config"]))]
pub struct RunArgs {
    /// Built-in benchmark: boat, pendulum or sheep.
    #[arg(long)]
    pub benchmark: Option<String>,
    /// Problem configuration file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// Time step; must divide the horizon.
    #[arg(long, conflicts_with = "time_steps")]
    pub dt: Option<f64>,
    #[arg(long)]
    pub time_steps: Option<usize>,
    #[arg(long)]
    pub boundary_points: Option<usize>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Write every N-th time node as a frame (the final node is always written).
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames_stride: u64,
    /// Also write SVG frames.
    #[arg(long)]
    pub svg: bool,
    /// Cross-check the cost with the Monte-Carlo and grid estimators.
    #[arg(long)]
    pub validate: bool,
    /// Monte-Carlo seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub mc_samples: usize,
    #[arg(long, default_value_t = 512)]
    pub grid_cells: usize,
    /// Absolute residual tolerance (default: 1e-6 times the initial residual).
    #[arg(long)]
    pub tol_g: Option<f64>,
    #[arg(long)]
    pub integrator: Option<Integrator>,
    /// Disable the adaptive boundary refinement.
    #[arg(long)]
    pub no_resample: bool,
    /// Record wall-clock times in convergence.csv (otherwise 0, keeping output byte-reproducible).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long, default_value_t = BaselineSettings::default().n_time_steps)]
    pub time_steps: usize,
    #[arg(long, default_value_t = BaselineSettings::default().n_boundary_pts)]
    pub boundary_points: usize,
    #[arg(long, default_value_t = BaselineSettings::default().iterations)]
    pub iters: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RegressArgs {
    /// Benchmarks to check (default: all).
    pub names: Vec<String>,
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long, default_value_t = bench::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

/// Oracle cross-check of one control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub stokes: f64,
    pub mc: f64,
    pub mc_std_error: f64,
    pub grid: f64,
}

impl Validation {
    pub fn mc_tolerance(&self) -> f64 {
        (MC_SE_FACTOR * self.mc_std_error).max(MC_FLOOR)
    }

    pub fn mc_pass(&self) -> bool {
        (self.stokes - self.mc).abs() <= self.mc_tolerance()
    }

    pub fn grid_pass(&self) -> bool {
        (self.stokes - self.grid).abs() <= GRID_TOL
    }
}

pub fn validate_control(
    problem: &ProblemInstance,
    signal: &ControlSignal,
    stokes: f64,
    mc_samples: usize,
    seed: u64,
    grid_cells: usize,
) -> Result<Validation> {
    let mc = mc_cost(problem, signal, mc_samples, seed)?;
    let half_width = problem.density.scale().map_or(6.0, |(_, sigma)| 6.0 * sigma);
    let grid = grid_cost(problem, signal, half_width, grid_cells)?;
    Ok(Validation {
        stokes,
        mc: mc.value,
        mc_std_error: mc.std_error,
        grid,
    })
}

/// Resolve the problem from a run's flags.
pub fn build_problem(args: &RunArgs) -> Result<ProblemInstance> {
    let mut problem = match (&args.benchmark, &args.config) {
        (Some(name), None) => make_benchmark(name, &Overrides::new())?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_problem_config(&text)?.build()?
        }
        _ => return Err(Error::InvalidArgument("give exactly one of --benchmark, --config".into())),
    };
    if let Some(integrator) = args.integrator {
        problem = problem.with_integrator(integrator);
    }
    if args.no_resample {
        let resampling = crate::problem::Resampling {
            enabled: false,
            ..problem.resampling
        };
        problem = problem.with_resampling(resampling)?;
    }
    if let Some(dt) = args.dt {
        let n = steps_for_dt(problem.horizon, dt)?;
        problem = problem.with_time_steps(n)?;
    }
    if let Some(n) = args.time_steps {
        problem = problem.with_time_steps(n)?;
    }
    if let Some(n) = args.boundary_points {
        problem = problem.with_boundary_pts(n)?;
    }
    Ok(problem)
}

/// Number of steps of size `dt` covering `horizon`; `dt` must divide it.
pub fn steps_for_dt(horizon: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let n = (horizon / dt).round();
    if n < 1.0 || ((n * dt - horizon) / horizon).abs() > 1e-9 {
        return Err(Error::invalid("dt", format!("{dt} does not divide the horizon {horizon}")));
    }
    Ok(n as usize)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn write_control_csv(path: &Path, signal: &ControlSignal) -> Result<()> {
    let mut out = create(path)?;
    let header: Vec<String> = (1..=signal.dim()).map(|i| format!("u{i}")).collect();
    writeln!(out, "t,{}", header.join(","))?;
    for (j, u) in signal.values().iter().enumerate() {
        let row: Vec<String> = u.iter().map(|x| fmt_num(*x)).collect();
        writeln!(out, "{},{}", fmt_num(j as f64 * signal.dt()), row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Row 0 is the initial control; row k the state after iteration k. `residual` is the
/// residual of the control in that row.
pub fn write_convergence_csv(path: &Path, state: &SolverState, timing: bool) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "iteration,cost,residual,epsilon,needle_measure,wall_time_ms")?;
    let zero = fmt_num(0.0);
    writeln!(
        out,
        "0,{},{},{zero},{zero},{zero}",
        fmt_num(state.initial_cost),
        fmt_num(state.initial_residual)
    )?;
    let records = &state.diagnostics;
    for (k, r) in records.iter().enumerate() {
        let residual = records.get(k + 1).map_or(state.residual, |next| next.max_g);
        let wall = if timing { r.wall_time_ms } else { 0.0 };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.iteration,
            fmt_num(r.cost),
            fmt_num(residual),
            fmt_num(r.epsilon),
            fmt_num(r.needle_measure),
            fmt_num(wall)
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Node indices written as frames: every `stride`-th node plus the last one.
pub fn frame_nodes(n_time_steps: usize, stride: usize) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..=n_time_steps).step_by(stride.max(1)).collect();
    if nodes.last() != Some(&n_time_steps) {
        nodes.push(n_time_steps);
    }
    nodes
}

pub fn write_frames(
    dir: &Path,
    problem: &ProblemInstance,
    trajectory: &[BoundaryCurve],
    nodes: &[usize],
    svg: bool,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    for &j in nodes {
        let mut out = create(&dir.join(format!("frame_{j:04}.csv")))?;
        trajectory[j].write_csv(&mut out)?;
        out.flush()?;
    }
    if !svg {
        return Ok(());
    }
    let outline = problem.target.sample_boundary(256);
    let mut view = Bounds::around(&outline).expect("target outline is finite");
    if let Some((center, sigma)) = problem.density.scale() {
        let r = crate::Vec2::new(3.0 * sigma, 3.0 * sigma);
        view = view.union(Bounds {
            min: center - r,
            max: center + r,
        });
    }
    for &j in nodes {
        if let Some(b) = Bounds::around(&trajectory[j].vertices) {
            view = view.union(b);
        }
    }
    let view = view.padded(0.05);
    for &j in nodes {
        let curve = &trajectory[j];
        let text = FrameSvg {
            view,
            density: &problem.density,
            target_outline: &outline,
            curve: &curve.vertices,
            title: format!("{}  t = {:.3}", problem.label.name, curve.time),
            cells: 80,
            width_px: 640.0,
        }
        .render();
        fs::write(dir.join(format!("frame_{j:04}.svg")), text)?;
    }
    Ok(())
}

fn validation_table(v: &Validation) -> Table {
    let mut t = Table::new();
    t.insert("stokes".into(), Value::Float(v.stokes));
    t.insert("mc".into(), Value::Float(v.mc));
    t.insert("mc_std_error".into(), Value::Float(v.mc_std_error));
    t.insert("mc_tolerance".into(), Value::Float(v.mc_tolerance()));
    t.insert("mc_pass".into(), Value::Boolean(v.mc_pass()));
    t.insert("grid".into(), Value::Float(v.grid));
    t.insert("grid_tolerance".into(), Value::Float(GRID_TOL));
    t.insert("grid_pass".into(), Value::Boolean(v.grid_pass()));
    t
}

pub struct RunSummary<'a> {
    pub problem: &'a ProblemInstance,
    pub config: &'a SolverConfig,
    pub state: &'a SolverState,
    pub validation: Option<(Validation, Validation)>,
    pub args: &'a RunArgs,
}

impl RunSummary<'_> {
    pub fn to_toml(&self) -> Result<String> {
        let p = self.problem;
        let s = self.state;
        let mut problem = Table::new();
        problem.insert("name".into(), Value::String(p.label.name.clone()));
        problem.insert("integrator".into(), Value::String(p.integrator.to_string()));
        problem.insert("resample".into(), Value::Boolean(p.resampling.enabled));
        problem.insert("T".into(), Value::Float(p.horizon));
        problem.insert("n_time_steps".into(), Value::Integer(p.n_time_steps as i64));
        problem.insert("n_boundary_pts".into(), Value::Integer(p.n_boundary_pts as i64));
        problem.insert("dt".into(), Value::Float(p.dt()));
        problem.insert("config_hash".into(), Value::String(bench::config_hash(p)));

        let params: Table = p.label.params.iter().map(|(k, v)| (k.clone(), Value::Float(*v))).collect();

        let mut solver = Table::new();
        solver.insert("max_iters".into(), Value::Integer(self.config.max_iters as i64));
        solver.insert(
            "tol_g".into(),
            Value::Float(self.config.tol_g.resolve(s.initial_residual)),
        );
        solver.insert("tol_improve".into(), Value::Float(self.config.tol_improve));
        solver.insert("iterations".into(), Value::Integer(s.iteration as i64));
        solver.insert(
            "termination".into(),
            Value::String(s.termination.map_or("none", |t| t.as_str()).into()),
        );
        solver.insert("initial_cost".into(), Value::Float(s.initial_cost));
        solver.insert("final_cost".into(), Value::Float(s.cost));
        solver.insert("initial_residual".into(), Value::Float(s.initial_residual));
        solver.insert("final_residual".into(), Value::Float(s.residual));

        let mut root = Table::new();
        root.insert("problem".into(), Value::Table(problem));
        root.insert("params".into(), Value::Table(params));
        root.insert("solver".into(), Value::Table(solver));
        if let Some((initial, last)) = &self.validation {
            let mut v = Table::new();
            v.insert("seed".into(), Value::Integer(self.args.seed as i64));
            v.insert("mc_samples".into(), Value::Integer(self.args.mc_samples as i64));
            v.insert("grid_cells".into(), Value::Integer(self.args.grid_cells as i64));
            v.insert("initial".into(), Value::Table(validation_table(initial)));
            v.insert("final".into(), Value::Table(validation_table(last)));
            root.insert("validation".into(), Value::Table(v));
        }
        toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Everything `run` produced, for callers that want more than the files.
pub struct RunOutcome {
    pub problem: ProblemInstance,
    pub state: SolverState,
    pub validation: Option<(Validation, Validation)>,
}

pub fn run(args: &RunArgs) -> Result<RunOutcome> {
    let problem = build_problem(args)?;
    let config = SolverConfig {
        max_iters: args.iters,
        tol_g: args
            .tol_g
            .map_or(SolverConfig::default().tol_g, ResidualTolerance::Absolute),
        ..Default::default()
    };
    fs::create_dir_all(&args.out)?;

    let started = Instant::now();
    let u0 = initial_control(&problem)?;
    let state = solve(&problem, u0.clone(), &config)?;
    if args.timing {
        eprintln!("solve: {:.3} s", started.elapsed().as_secs_f64());
    }

    let frames = args.out.join("frames");
    let nodes = frame_nodes(problem.n_time_steps, args.frames_stride as usize);
    write_frames(&frames, &problem, &state.trajectory, &nodes, args.svg)?;
    write_control_csv(&args.out.join("control.csv"), &state.control)?;
    write_convergence_csv(&args.out.join("convergence.csv"), &state, args.timing)?;

    let validation = if args.validate {
        let initial = validate_control(&problem, &u0, state.initial_cost, args.mc_samples, args.seed, args.grid_cells)?;
        let last = validate_control(
            &problem,
            &state.control,
            stokes_mass(&state.trajectory[0].vertices, &problem.density)?,
            args.mc_samples,
            args.seed,
            args.grid_cells,
        )?;
        Some((initial, last))
    } else {
        None
    };

    let summary = RunSummary {
        problem: &problem,
        config: &config,
        state: &state,
        validation,
        args,
    }
    .to_toml()?;
    fs::write(args.out.join("summary.toml"), summary)?;
    Ok(RunOutcome {
        problem,
        state,
        validation,
    })
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::UnknownBenchmark(_)
            | Error::UnknownKey(_)
            | Error::FixedParameter { .. }
            | Error::InvalidParameter { .. }
            | Error::Config(_)
            | Error::InvalidArgument(_)
    )
}

/// Parse `args` and execute; returns the process exit code (0 ok, 1 failure, 2 usage or
/// configuration error).
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if is_usage_error(&e) {
                2
            } else {
                1
            }
        }
    }
}

fn execute(command: &Command) -> Result<i32> {
    match command {
        Command::Run(args) => {
            let outcome = run(args)?;
            let s = &outcome.state;
            println!(
                "{}: cost {} -> {} after {} iterations ({}), residual {}",
                outcome.problem.label.name,
                fmt_num(s.initial_cost),
                fmt_num(s.cost),
                s.iteration,
                s.termination.map_or("none", |t| t.as_str()),
                fmt_num(s.residual)
            );
            if let Some((initial, last)) = outcome.validation {
                for (label, v) in [("initial", initial), ("final", last)] {
                    println!(
                        "{label}: stokes {:.6} mc {:.6} (se {:.1e}) grid {:.6} -> mc {}, grid {}",
                        v.stokes,
                        v.mc,
                        v.mc_std_error,
                        v.grid,
                        if v.mc_pass() { "ok" } else { "MISMATCH" },
                        if v.grid_pass() { "ok" } else { "MISMATCH" }
                    );
                }
            }
            Ok(0)
        }
        Command::Baseline(args) => {
            let dir = args.dir.clone().unwrap_or_else(bench::default_baseline_dir);
            let settings = BaselineSettings {
                n_time_steps: args.time_steps,
                n_boundary_pts: args.boundary_points,
                iterations: args.iters,
            };
            for record in bench::write_all_baselines(&dir, settings)? {
                println!(
                    "{}: {} costs, final {} [{}]",
                    record.benchmark,
                    record.costs.len(),
                    fmt_num(*record.costs.last().unwrap_or(&f64::NAN)),
                    record.provenance
                );
            }
            Ok(0)
        }
        Command::Regress(args) => {
            let dir = args.dir.clone().unwrap_or_else(bench::default_baseline_dir);
            let names: Vec<String> = if args.names.is_empty() {
                Benchmark::ALL.iter().map(|b| b.name().to_string()).collect()
            } else {
                args.names.clone()
            };
            let mut failed = false;
            for name in &names {
                let report = bench::regression_check(&dir, name, args.tolerance)?;
                println!("{report}");
                failed |= !report.passed();
            }
            Ok(i32::from(failed))
        }
    }
}
