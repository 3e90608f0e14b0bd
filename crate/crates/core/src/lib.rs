//! Exploration design for certainty-equivalence optimization.
//!
//! A controller repeatedly applies the input that is optimal for its current
//! parameter estimate. Without deliberate excitation the estimate can stall;
//! with too much, the cost of perturbing the input dominates. This crate
//! computes the regret upper bound `R_ub` for a sequence of exploration
//! variances, finds its minimizer (which is always either "no exploration"
//! or "explore only at the first step"), and evaluates strategies by
//! closed-loop Monte Carlo on a scalar quadratic example.
//!
//! ```
//! use exploration_design::{gaussian_info, optimize_schedule, ScheduleKind};
//!
//! let i = gaussian_info(-0.6);
//! let sol = optimize_schedule(&i, 1.0, 50, 100.0).unwrap();
//! assert_eq!(sol.kind, ScheduleKind::Immediate);
//! assert!(sol.x1 > 0.0);
//! ```

// `!(x >= 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod infofn;
pub mod mc;
pub mod model;
pub mod regret;
pub mod scheduler;
pub mod stats;

pub use error::{Error, Result};
pub use estimator::{init_experiment, score, EstimatorState};
pub use infofn::{
    binary_info, full_incremental_info, gaussian_info, log_space, moment_expansion_check,
    Excitation, Family, InformationFunction,
};
pub use mc::{
    grid_search, run_experiment, run_replicate, run_strategy, Design, DesignMode, Designer,
    ExperimentConfig, ExperimentResults, GridSpec, NoiseBank,
};
pub use model::{quadratic_example, QuadraticModel, SystemModel};
pub use regret::{
    aggregate_regret, empirical_regret, regret_approx, regret_upper_bound, schedule_upper_bound,
    ExplorationSchedule, RegretReport, Strategy, StrategyKind,
};
pub use scheduler::{
    brute_force_verify, critical_prior_information, immediate_condition, kkt_certificate,
    optimize_schedule, BruteForceReport, ScheduleKind, ScheduleSolution,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/information.md")]
    mod information {}
    #[doc = include_str!("../../../book/src/regret-bound.md")]
    mod regret_bound {}
    #[doc = include_str!("../../../book/src/scheduling.md")]
    mod scheduling {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
