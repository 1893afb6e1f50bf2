//! TOML problem configuration files.
//!
//! ```toml
//! [problem]
//! name = "sheep"
//! T = 3.0
//! n_time_steps = 1200
//! n_boundary_pts = 400
//!
//! [field]
//! alpha = 1.0
//! beta = 5.0
//! R = 3.0
//!
//! [target]
//! a = 2.0
//! b = 1.2
//! ```
//!
//! Every key must be known for the named benchmark; anything else is rejected.

use toml::Value;

use super::{make_benchmark, Integrator, Overrides, ProblemInstance, Resampling};
use crate::error::{Error, Result};

const SECTIONS: [&str; 5] = ["problem", "field", "control", "density", "target"];

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub benchmark: String,
    pub overrides: Overrides,
    pub integrator: Option<Integrator>,
    pub resample: Option<bool>,
}

impl ProblemConfig {
    pub fn build(&self) -> Result<ProblemInstance> {
        let mut problem = make_benchmark(&self.benchmark, &self.overrides)?;
        if let Some(integrator) = self.integrator {
            problem = problem.with_integrator(integrator);
        }
        if let Some(enabled) = self.resample {
            let resampling = Resampling {
                enabled,
                ..problem.resampling
            };
            problem = problem.with_resampling(resampling)?;
        }
        Ok(problem)
    }
}

fn number(key: &str, value: &Value) -> Result<f64> {
    match value {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(Error::invalid(key, format!("expected a number, found {}", other.type_str()))),
    }
}

pub fn parse_problem_config(text: &str) -> Result<ProblemConfig> {
    let root: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
    let mut benchmark = None;
    let mut integrator = None;
    let mut resample = None;
    let mut overrides = Overrides::new();

    for (section, body) in &root {
        if !SECTIONS.contains(&section.as_str()) {
            return Err(Error::UnknownKey(section.clone()));
        }
        let table = body
            .as_table()
            .ok_or_else(|| Error::invalid(section, "expected a table"))?;
        for (key, value) in table {
            let full = format!("{section}.{key}");
            match full.as_str() {
                "problem.name" => {
                    let name = value
                        .as_str()
                        .ok_or_else(|| Error::invalid(&full, "expected a string"))?;
                    benchmark = Some(name.to_string());
                }
                "problem.integrator" => {
                    let name = value
                        .as_str()
                        .ok_or_else(|| Error::invalid(&full, "expected a string"))?;
                    integrator = Some(name.parse()?);
                }
                "problem.resample" => {
                    resample = Some(value.as_bool().ok_or_else(|| Error::invalid(&full, "expected a boolean"))?);
                }
                _ => {
                    overrides.insert(full.clone(), number(&full, value)?);
                }
            }
        }
    }

    let benchmark = benchmark.ok_or_else(|| Error::Config("missing `problem.name`".into()))?;
    Ok(ProblemConfig {
        benchmark,
        overrides,
        integrator,
        resample,
    })
}
