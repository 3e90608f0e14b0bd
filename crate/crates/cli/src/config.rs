//! TOML run configuration.
//!
//! ```toml
//! [experiment]          # every key optional; defaults reproduce the study
//! theta0_list = [-2.0, -0.7, -0.5, -0.4, -0.3, 0.2, 0.4, 0.7, 1.0, 3.0]
//! horizon = 50
//! sigma2 = 1.0
//! n_mc = 1000
//! master_seed = 2024
//! design_mode = "both"             # "a", "b" or "both"
//! oracle_design = false
//! design_plugin = "per_replicate"  # or "mean_estimate"
//! init_input = 1.0
//! # i0 = 1.0                       # override the initialization information
//! trajectory_theta0 = 0.4
//! max_replicate_steps = 100000000000
//! constants_grid = { count = 301, lo = 1e-3, hi = 1e2 }
//! exponent_grid = { count = 21, lo = -20.0, hi = -0.1 }
//!
//! [plan]
//! x_max = 100.0
//!
//! [verify]
//! horizons = [3, 4, 5]
//! i0_values = [0.5, 1.0, 2.0]
//! u0_values = [-2.0, -1.0, -0.5]
//! grid_step = 0.1
//! grid_max = 4.0
//! max_evaluations = 100000000
//! custom = [{ name = "cubic", coefficients = [1.0, 2.0, 0.5, 0.1] }]
//! ```

use std::path::Path;

use exploration_design::mc::{DesignMode, ExperimentConfig};
use exploration_design::{Error, InformationFunction};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub plan: PlanConfig,
    pub verify: VerifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    /// Upper end of the first-step variance search.
    pub x_max: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            x_max: exploration_design::scheduler::DEFAULT_X_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub horizons: Vec<usize>,
    pub i0_values: Vec<f64>,
    pub u0_values: Vec<f64>,
    pub grid_step: f64,
    pub grid_max: f64,
    /// Per-instance cap on bound evaluations.
    pub max_evaluations: u64,
    pub custom: Vec<CustomInfo>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            horizons: vec![3, 4, 5],
            i0_values: vec![0.5, 1.0, 2.0],
            u0_values: vec![-2.0, -1.0, -0.5],
            grid_step: 0.1,
            grid_max: 4.0,
            max_evaluations: 100_000_000,
            custom: Vec::new(),
        }
    }
}

/// Polynomial information function `i(x) = Σ cₖ xᵏ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomInfo {
    pub name: String,
    pub coefficients: Vec<f64>,
}

impl CustomInfo {
    pub fn build(&self) -> exploration_design::Result<InformationFunction> {
        InformationFunction::polynomial(&self.coefficients)
    }
}

impl VerifyConfig {
    /// `0, step, 2·step, …` up to `grid_max`.
    pub fn grid(&self) -> Vec<f64> {
        let n = (self.grid_max / self.grid_step + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * self.grid_step).collect()
    }
}

/// Command-line overrides, applied after the file is read.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub theta0: Option<f64>,
    pub design: Option<DesignMode>,
    pub oracle_design: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        let e = &mut cfg.experiment;
        if let Some(s) = self.seed {
            e.master_seed = s;
        }
        if let Some(t) = self.theta0 {
            e.theta0_list = vec![t];
            e.trajectory_theta0 = Some(t);
        }
        if let Some(d) = self.design {
            e.design_mode = d;
        }
        if let Some(o) = self.oracle_design {
            e.oracle_design = o;
        }
    }
}

/// 1-based line of the first `key = …` or `[section.key]` entry.
fn locate(source: &str, key: &str) -> Option<usize> {
    source
        .lines()
        .position(|line| {
            let t = line.trim_start();
            let after_key = t.strip_prefix(key).map(str::trim_start);
            matches!(after_key, Some(rest) if rest.starts_with('=') || rest.starts_with('.'))
                || t.trim_end()
                    .trim_start_matches('[')
                    .trim_end_matches(']')
                    .rsplit('.')
                    .next()
                    == Some(key)
                    && t.starts_with('[')
        })
        .map(|i| i + 1)
}

fn located(origin: &str, source: &str, key: &str, reason: impl std::fmt::Display) -> CliError {
    match locate(source, key) {
        Some(line) => CliError::Config(format!("{origin}:{line}: `{key}`: {reason}")),
        None => CliError::Config(format!("{origin}: `{key}`: {reason}")),
    }
}

impl RunConfig {
    /// Parses and validates; errors carry `origin:line:` prefixes.
    pub fn parse(source: &str, origin: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(source).map_err(|e| {
            let line = e
                .span()
                .map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1);
            let msg = e.message().trim_end();
            match line {
                Some(l) => CliError::Config(format!("{origin}:{l}: {msg}")),
                None => CliError::Config(format!("{origin}: {msg}")),
            }
        })?;
        overrides.apply(&mut cfg);
        cfg.validate(origin, source)?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let source = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                Self::parse(&source, &p.display().to_string(), overrides)
            }
            None => Self::parse("", "<defaults>", overrides),
        }
    }

    fn validate(&self, origin: &str, source: &str) -> Result<(), CliError> {
        if let Err(e) = self.experiment.validate() {
            return Err(match e {
                Error::InvalidArgument { name, reason } => located(origin, source, name, reason),
                other => CliError::Library(other),
            });
        }
        if !(self.plan.x_max > 0.0 && self.plan.x_max.is_finite()) {
            return Err(located(origin, source, "x_max", "must be positive"));
        }
        let v = &self.verify;
        if v.horizons.iter().any(|&t| t < 2) {
            return Err(located(
                origin,
                source,
                "horizons",
                "every horizon must be at least 2",
            ));
        }
        if v.i0_values.iter().any(|&i| !(i > 0.0 && i.is_finite())) {
            return Err(located(origin, source, "i0_values", "must be positive"));
        }
        if v.u0_values.iter().any(|u| !u.is_finite()) {
            return Err(located(origin, source, "u0_values", "must be finite"));
        }
        if !(v.grid_step > 0.0 && v.grid_max >= v.grid_step && v.grid_max.is_finite()) {
            return Err(located(
                origin,
                source,
                "grid_step",
                "need 0 < grid_step <= grid_max",
            ));
        }
        for c in &v.custom {
            if let Err(e) = c.build() {
                let line = source
                    .lines()
                    .position(|l| l.contains(&format!("\"{}\"", c.name)))
                    .map(|i| i + 1);
                let at = line.map_or(String::new(), |l| format!("{l}:"));
                return Err(CliError::Config(format!(
                    "{origin}:{at} custom information function `{}`: {e}",
                    c.name
                )));
            }
        }
        Ok(())
    }
}
