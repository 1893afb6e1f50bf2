//! Regression baselines for the built-in benchmarks.
//!
//! A baseline is a short solver run at a coarse discretization, stored as
//! `<name>.csv` (cost per iteration) next to `<name>.toml` (config snapshot). The
//! config hash covers the benchmark name and every model parameter but not the
//! discretization, so rerunning with a different `dt` is compared (and reported as
//! drift) while a changed model parameter is refused as a different problem.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::output::fmt_num;
use crate::problem::{make_benchmark, Benchmark, Integrator, Overrides, ProblemInstance};
use crate::solver::{initial_control, solve, SolverConfig};

/// Discretization and iteration count of a baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineSettings {
    pub n_time_steps: usize,
    pub n_boundary_pts: usize,
    pub iterations: usize,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings {
            n_time_steps: 300,
            n_boundary_pts: 120,
            iterations: 10,
        }
    }
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

const DISCRETIZATION_KEYS: [&str; 2] = ["problem.n_time_steps", "problem.n_boundary_pts"];

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRecord {
    pub benchmark: String,
    pub config_hash: String,
    /// Cost before the first iteration followed by the cost after each one.
    pub costs: Vec<f64>,
    pub final_residual: f64,
    pub provenance: String,
    pub settings: BaselineSettings,
    pub integrator: Integrator,
    pub params: Overrides,
}

/// Directory holding the baselines shipped with the crate.
pub fn default_baseline_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("baselines")
}

/// SHA-256 over the benchmark name and all non-discretization parameters.
pub fn config_hash(problem: &ProblemInstance) -> String {
    let mut hasher = Sha256::new();
    hasher.update(problem.label.name.as_bytes());
    hasher.update(b"\n");
    for (key, value) in &problem.label.params {
        if DISCRETIZATION_KEYS.contains(&key.as_str()) {
            continue;
        }
        hasher.update(format!("{key}={}\n", fmt_num(*value)).as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// The benchmark at the baseline discretization.
pub fn baseline_problem(name: &str, overrides: &Overrides, settings: BaselineSettings) -> Result<ProblemInstance> {
    make_benchmark(name, overrides)?
        .with_time_steps(settings.n_time_steps)?
        .with_boundary_pts(settings.n_boundary_pts)
}

fn costs_csv(costs: &[f64]) -> String {
    let mut text = String::from("iteration,cost\n");
    for (k, c) in costs.iter().enumerate() {
        text.push_str(&format!("{k},{}\n", fmt_num(*c)));
    }
    text
}

/// Solve `problem` from the default initial control for `iterations` iterations.
pub fn run_baseline(problem: &ProblemInstance, iterations: usize) -> Result<BaselineRecord> {
    let config = SolverConfig {
        max_iters: iterations,
        ..Default::default()
    };
    let state = solve(problem, initial_control(problem)?, &config)?;
    let costs = state.cost_history();
    let digest = hex::encode(Sha256::digest(costs_csv(&costs).as_bytes()));
    Ok(BaselineRecord {
        benchmark: problem.label.name.clone(),
        config_hash: config_hash(problem),
        costs,
        final_residual: state.residual,
        provenance: format!("{} {} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"), &digest[..12]),
        settings: BaselineSettings {
            n_time_steps: problem.n_time_steps,
            n_boundary_pts: problem.n_boundary_pts,
            iterations,
        },
        integrator: problem.integrator,
        params: problem.label.params.clone(),
    })
}

fn paths(dir: &Path, name: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{name}.csv")), dir.join(format!("{name}.toml")))
}

pub fn write_baseline(dir: &Path, record: &BaselineRecord) -> Result<()> {
    fs::create_dir_all(dir)?;
    let (csv, snapshot) = paths(dir, &record.benchmark);
    fs::write(csv, costs_csv(&record.costs))?;

    let mut baseline = Table::new();
    baseline.insert("benchmark".into(), Value::String(record.benchmark.clone()));
    baseline.insert("config_hash".into(), Value::String(record.config_hash.clone()));
    baseline.insert("final_residual".into(), Value::Float(record.final_residual));
    baseline.insert("provenance".into(), Value::String(record.provenance.clone()));
    baseline.insert("n_time_steps".into(), Value::Integer(record.settings.n_time_steps as i64));
    baseline.insert("n_boundary_pts".into(), Value::Integer(record.settings.n_boundary_pts as i64));
    baseline.insert("iterations".into(), Value::Integer(record.settings.iterations as i64));
    baseline.insert("integrator".into(), Value::String(record.integrator.to_string()));
    let params: Table = record
        .params
        .iter()
        .map(|(k, v)| (k.clone(), Value::Float(*v)))
        .collect();
    let mut root = Table::new();
    root.insert("baseline".into(), Value::Table(baseline));
    root.insert("params".into(), Value::Table(params));
    fs::write(snapshot, toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?)?;
    Ok(())
}

fn field<'a>(table: &'a Table, key: &str) -> Result<&'a Value> {
    table
        .get(key)
        .ok_or_else(|| Error::Config(format!("baseline snapshot lacks `{key}`")))
}

fn as_count(table: &Table, key: &str) -> Result<usize> {
    field(table, key)?
        .as_integer()
        .and_then(|i| usize::try_from(i).ok())
        .ok_or_else(|| Error::Config(format!("baseline `{key}` is not a count")))
}

fn as_str<'a>(table: &'a Table, key: &str) -> Result<&'a str> {
    field(table, key)?
        .as_str()
        .ok_or_else(|| Error::Config(format!("baseline `{key}` is not a string")))
}

fn as_float(value: &Value, key: &str) -> Result<f64> {
    match value {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("baseline `{key}` is not a number"))),
    }
}

pub fn read_baseline(dir: &Path, name: &str) -> Result<BaselineRecord> {
    let (csv, snapshot) = paths(dir, name);
    if !csv.exists() || !snapshot.exists() {
        return Err(Error::MissingBaseline(name.to_string()));
    }
    let root: Table = fs::read_to_string(&snapshot)?
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(format!("{}: {e}", snapshot.display())))?;
    let baseline = field(&root, "baseline")?
        .as_table()
        .ok_or_else(|| Error::Config("`baseline` is not a table".into()))?;
    let params = field(&root, "params")?
        .as_table()
        .ok_or_else(|| Error::Config("`params` is not a table".into()))?
        .iter()
        .map(|(k, v)| Ok((k.clone(), as_float(v, k)?)))
        .collect::<Result<Overrides>>()?;

    let text = fs::read_to_string(&csv)?;
    let mut lines = text.lines();
    if lines.next() != Some("iteration,cost") {
        return Err(Error::Config(format!("{}: unexpected header", csv.display())));
    }
    let costs = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split_once(',')
                .and_then(|(_, c)| c.parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("{}: bad row `{l}`", csv.display())))
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(BaselineRecord {
        benchmark: as_str(baseline, "benchmark")?.to_string(),
        config_hash: as_str(baseline, "config_hash")?.to_string(),
        costs,
        final_residual: as_float(field(baseline, "final_residual")?, "final_residual")?,
        provenance: as_str(baseline, "provenance")?.to_string(),
        settings: BaselineSettings {
            n_time_steps: as_count(baseline, "n_time_steps")?,
            n_boundary_pts: as_count(baseline, "n_boundary_pts")?,
            iterations: as_count(baseline, "iterations")?,
        },
        integrator: as_str(baseline, "integrator")?.parse()?,
        params,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum RegressionOutcome {
    Pass {
        max_drift: f64,
    },
    /// First index where the sequences differ by more than the tolerance (or where one
    /// of them ends early; the missing side is `None`).
    Diverged {
        first_index: usize,
        expected: Option<f64>,
        actual: Option<f64>,
        max_drift: f64,
    },
    ConfigMismatch {
        expected: String,
        actual: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionReport {
    pub benchmark: String,
    pub tolerance: f64,
    pub outcome: RegressionOutcome,
}

impl RegressionReport {
    pub fn passed(&self) -> bool {
        matches!(self.outcome, RegressionOutcome::Pass { .. })
    }
}

impl fmt::Display for RegressionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |x: Option<f64>| x.map_or("missing".to_string(), fmt_num);
        match &self.outcome {
            RegressionOutcome::Pass { max_drift } => {
                write!(f, "{}: pass (max drift {max_drift:.3e}, tolerance {:.1e})", self.benchmark, self.tolerance)
            }
            RegressionOutcome::Diverged {
                first_index,
                expected,
                actual,
                max_drift,
            } => write!(
                f,
                "{}: FAIL at iteration {first_index}: expected {}, got {} (max drift {max_drift:.3e}, tolerance {:.1e})",
                self.benchmark,
                opt(*expected),
                opt(*actual),
                self.tolerance
            ),
            RegressionOutcome::ConfigMismatch { expected, actual } => write!(
                f,
                "{}: config hash {actual} differs from baseline {expected}; not compared",
                self.benchmark
            ),
        }
    }
}

/// Compare cost sequences entry by entry.
pub fn compare_costs(expected: &[f64], actual: &[f64], tolerance: f64) -> RegressionOutcome {
    let max_drift = expected
        .iter()
        .zip(actual)
        .map(|(e, a)| (e - a).abs())
        .fold(0.0f64, f64::max);
    let first = expected
        .iter()
        .zip(actual)
        .position(|(e, a)| !((e - a).abs() <= tolerance));
    match first {
        Some(i) => RegressionOutcome::Diverged {
            first_index: i,
            expected: Some(expected[i]),
            actual: Some(actual[i]),
            max_drift,
        },
        None if expected.len() != actual.len() => {
            let i = expected.len().min(actual.len());
            RegressionOutcome::Diverged {
                first_index: i,
                expected: expected.get(i).copied(),
                actual: actual.get(i).copied(),
                max_drift,
            }
        }
        None => RegressionOutcome::Pass { max_drift },
    }
}

/// Rerun `problem` for the baseline's iteration count and compare cost sequences.
/// A problem whose config hash differs from the baseline's is not run.
pub fn check_against(baseline: &BaselineRecord, problem: &ProblemInstance, tolerance: f64) -> Result<RegressionReport> {
    let hash = config_hash(problem);
    let outcome = if hash != baseline.config_hash {
        RegressionOutcome::ConfigMismatch {
            expected: baseline.config_hash.clone(),
            actual: hash,
        }
    } else {
        let rerun = run_baseline(problem, baseline.settings.iterations)?;
        compare_costs(&baseline.costs, &rerun.costs, tolerance)
    };
    Ok(RegressionReport {
        benchmark: baseline.benchmark.clone(),
        tolerance,
        outcome,
    })
}

/// Rerun benchmark `name` exactly as recorded in `dir` and compare.
pub fn regression_check(dir: &Path, name: &str, tolerance: f64) -> Result<RegressionReport> {
    let baseline = read_baseline(dir, name)?;
    let problem = baseline_problem(name, &Overrides::new(), baseline.settings)?.with_integrator(baseline.integrator);
    check_against(&baseline, &problem, tolerance)
}

/// Regenerate the baselines of all benchmarks into `dir`.
pub fn write_all_baselines(dir: &Path, settings: BaselineSettings) -> Result<Vec<BaselineRecord>> {
    Benchmark::ALL
        .iter()
        .map(|b| {
            let problem = baseline_problem(b.name(), &Overrides::new(), settings)?;
            let record = run_baseline(&problem, settings.iterations)?;
            write_baseline(dir, &record)?;
            Ok(record)
        })
        .collect()
}
