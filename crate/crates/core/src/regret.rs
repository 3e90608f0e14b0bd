//! Regret quantities for an exploration-variance schedule.
//!
//! All design-time quantities are in the scaled convention where the
//! curvature factor `H_u/2` is dropped and information is normalized by
//! `J_θ²`; for the quadratic example both factors equal one. With
//! `x = (x₁, …, x_{T−1})`:
//!
//! ```text
//! R_ub = 1/i₀ + Σ_{t=1}^{T−1} 1/(i₀ + Σ_{s≤t} i(x_s)) + Σ_{t=1}^{T−1} x_t
//! R̃    = 1/i₀ + Σ_{t=1}^{T−1} 1/ĩ_t                  + Σ_{t=1}^{T−1} x_t,
//!        ĩ_t = ĩ_{t−1} + 𝓘(x_t, 1/ĩ_{t−1}),  ĩ₀ = i₀
//! ```
//!
//! The final variance `x_T` only adds to the linear cost, so design routines
//! take vectors of length `T−1`. [`schedule_upper_bound`] accepts a full
//! length-`T` schedule and charges `x_T` linearly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infofn::{Excitation, InformationFunction};
use crate::model::SystemModel;
use crate::stats::mean_stderr;

/// Exploration strategy families with their tuning constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Lazy,
    ImmediateGaussian {
        x_g: f64,
    },
    ImmediateBinary {
        x_b: f64,
    },
    /// `x_t = c·t^p`, `p < 0`.
    DecayingGaussian {
        c: f64,
        p: f64,
    },
    Explicit {
        excitation: Excitation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Lazy,
    ImmediateGaussian,
    ImmediateBinary,
    DecayingGaussian,
    Explicit,
}

impl StrategyKind {
    /// The four families compared in the Monte Carlo study, in report order.
    pub const STUDY: [StrategyKind; 4] = [
        StrategyKind::Lazy,
        StrategyKind::ImmediateGaussian,
        StrategyKind::ImmediateBinary,
        StrategyKind::DecayingGaussian,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Lazy => "lazy",
            StrategyKind::ImmediateGaussian => "immediate_gaussian",
            StrategyKind::ImmediateBinary => "immediate_binary",
            StrategyKind::DecayingGaussian => "decaying_gaussian",
            StrategyKind::Explicit => "explicit",
        }
    }

    pub fn excitation(self) -> Excitation {
        match self {
            StrategyKind::ImmediateBinary => Excitation::Binary,
            _ => Excitation::Gaussian,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        [
            StrategyKind::Lazy,
            StrategyKind::ImmediateGaussian,
            StrategyKind::ImmediateBinary,
            StrategyKind::DecayingGaussian,
            StrategyKind::Explicit,
        ]
        .into_iter()
        .find(|k| k.as_str() == norm)
        .ok_or_else(|| Error::invalid("strategy", format!("unknown strategy `{s}`")))
    }
}

impl Strategy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Strategy::Lazy => StrategyKind::Lazy,
            Strategy::ImmediateGaussian { .. } => StrategyKind::ImmediateGaussian,
            Strategy::ImmediateBinary { .. } => StrategyKind::ImmediateBinary,
            Strategy::DecayingGaussian { .. } => StrategyKind::DecayingGaussian,
            Strategy::Explicit { .. } => StrategyKind::Explicit,
        }
    }

    /// Family of the unit-variance base `ᾱₜ`. Lazy schedules never scale a
    /// base, so the choice is immaterial; Gaussian is reported.
    pub fn excitation(&self) -> Excitation {
        match self {
            Strategy::ImmediateBinary { .. } => Excitation::Binary,
            Strategy::Explicit { excitation } => *excitation,
            _ => Excitation::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |name, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ))
            }
        };
        match *self {
            Strategy::ImmediateGaussian { x_g } => nonneg("x_g", x_g),
            Strategy::ImmediateBinary { x_b } => nonneg("x_b", x_b),
            Strategy::DecayingGaussian { c, p } => {
                nonneg("c", c)?;
                if p < 0.0 && p.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "p",
                        format!("decay exponent must be negative, got {p}"),
                    ))
                }
            }
            Strategy::Lazy | Strategy::Explicit { .. } => Ok(()),
        }
    }
}

/// Per-step exploration variances `x₁..x_T` with the strategy that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    variances: Vec<f64>,
    strategy: Strategy,
}

impl ExplorationSchedule {
    pub fn new(strategy: Strategy, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon", "must be at least 1"));
        }
        strategy.validate()?;
        let mut v = vec![0.0; horizon];
        match strategy {
            Strategy::Lazy => {}
            Strategy::ImmediateGaussian { x_g: x } | Strategy::ImmediateBinary { x_b: x } => {
                v[0] = x
            }
            Strategy::DecayingGaussian { c, p } => {
                for (t, vt) in v.iter_mut().enumerate() {
                    *vt = c * ((t + 1) as f64).powf(p);
                }
            }
            Strategy::Explicit { .. } => {
                return Err(Error::invalid(
                    "strategy",
                    "use ExplorationSchedule::explicit for explicit schedules",
                ))
            }
        }
        Ok(Self {
            variances: v,
            strategy,
        })
    }

    pub fn explicit(variances: Vec<f64>, excitation: Excitation) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::invalid("variances", "must be non-empty"));
        }
        check_variances(&variances)?;
        Ok(Self {
            variances,
            strategy: Strategy::Explicit { excitation },
        })
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn horizon(&self) -> usize {
        self.variances.len()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn excitation(&self) -> Excitation {
        self.strategy.excitation()
    }
}

/// Summary of one strategy evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    /// Replicate mean of the cumulative regret `R̄`.
    pub empirical: f64,
    pub empirical_stderr: f64,
    /// `R̃`, when the information function supports the recursion.
    pub approx: Option<f64>,
    pub upper_bound: f64,
    /// Mean cumulative regret after each step `t = 1..T`.
    pub trajectory: Vec<f64>,
    pub trajectory_stderr: Vec<f64>,
}

fn check_variances(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        Some(k) => Err(Error::invalid(
            "x",
            format!("entry {k} is {} (must be finite and >= 0)", x[k]),
        )),
        None => Ok(()),
    }
}

fn check_design_args(i0: f64, x: &[f64], horizon: usize) -> Result<()> {
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(Error::invalid("i0", format!("must be positive, got {i0}")));
    }
    if horizon < 1 || x.len() != horizon - 1 {
        return Err(Error::invalid(
            "x",
            format!(
                "expected {} variances for horizon {horizon}, got {}",
                horizon.saturating_sub(1),
                x.len()
            ),
        ));
    }
    check_variances(x)
}

/// `R_ub` for `x = (x₁..x_{T−1})`.
pub fn regret_upper_bound(
    ifn: &InformationFunction,
    i0: f64,
    x: &[f64],
    horizon: usize,
) -> Result<f64> {
    check_design_args(i0, x, horizon)?;
    Ok(upper_bound_unchecked(ifn, i0, x))
}

#[inline]
pub(crate) fn upper_bound_unchecked(ifn: &InformationFunction, i0: f64, x: &[f64]) -> f64 {
    let mut info = i0;
    let mut total = 1.0 / i0;
    for &xt in x {
        info += ifn.eval(xt);
        total += 1.0 / info + xt;
    }
    total
}

/// `R_ub` for a full length-`T` schedule; `x_T` enters only the linear term.
pub fn schedule_upper_bound(ifn: &InformationFunction, i0: f64, variances: &[f64]) -> Result<f64> {
    let (last, head) = variances
        .split_last()
        .ok_or_else(|| Error::invalid("variances", "must be non-empty"))?;
    check_variances(variances)?;
    Ok(regret_upper_bound(ifn, i0, head, variances.len())? + last)
}

/// `R̃` via the approximate information recursion.
pub fn regret_approx(ifn: &InformationFunction, i0: f64, x: &[f64], horizon: usize) -> Result<f64> {
    check_design_args(i0, x, horizon)?;
    let mut info = i0;
    let mut total = 1.0 / i0;
    for &xt in x {
        info += ifn.full(xt, 1.0 / info)?;
        total += 1.0 / info + xt;
    }
    Ok(total)
}

/// Replicate-mean cumulative regret of realized input sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalRegret {
    pub mean: f64,
    pub stderr: f64,
    pub trajectory: Vec<f64>,
    pub trajectory_stderr: Vec<f64>,
}

/// Aggregates cumulative regret over replicates given each replicate's
/// applied inputs `u₁..u_T`.
pub fn empirical_regret<M: SystemModel + ?Sized>(
    trajectories: &[Vec<f64>],
    model: &M,
) -> Result<EmpiricalRegret> {
    let per_step: Vec<Vec<f64>> = trajectories
        .iter()
        .map(|us| us.iter().map(|&u| model.instantaneous_regret(u)).collect())
        .collect();
    aggregate_regret(&per_step)
}

/// Same as [`empirical_regret`] but from per-step regrets directly.
pub fn aggregate_regret(per_step: &[Vec<f64>]) -> Result<EmpiricalRegret> {
    let first = per_step.first().ok_or(Error::EmptyReplicates)?;
    let horizon = first.len();
    if per_step.iter().any(|r| r.len() != horizon) {
        return Err(Error::invalid(
            "trajectories",
            "replicates have different horizons",
        ));
    }
    let n = per_step.len();
    // cumulative[t][r]
    let mut cumulative = vec![vec![0.0; n]; horizon];
    for (r, steps) in per_step.iter().enumerate() {
        let mut acc = 0.0;
        for (t, v) in steps.iter().enumerate() {
            acc += v;
            cumulative[t][r] = acc;
        }
    }
    let (trajectory, trajectory_stderr): (Vec<f64>, Vec<f64>) =
        cumulative.iter().map(|c| mean_stderr(c)).unzip();
    let (mean, stderr) = match horizon {
        0 => (0.0, 0.0),
        _ => (trajectory[horizon - 1], trajectory_stderr[horizon - 1]),
    };
    Ok(EmpiricalRegret {
        mean,
        stderr,
        trajectory,
        trajectory_stderr,
    })
}
