//! Closed-loop Monte Carlo evaluation of exploration strategies.
//!
//! Each replicate runs the certainty-equivalence loop: one initialization
//! measurement at a fixed input, then for `t = 1..T` apply
//! `uₜ = U(θ̂ₜ) + √xₜ·ᾱₜ`, observe `yₜ = h(uₜ, θ₀) + σeₜ` and refit.
//! All strategies and grid points read the same [`NoiseBank`], so
//! differences between them are paired.
//!
//! Tuning constants are chosen on grids either by the regret upper bound
//! (design a) or by the simulated regret itself (design b).

mod bank;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bank::{draw, stream_rng, NoiseBank, Stream};

use crate::error::{Error, Result};
use crate::estimator::init_experiment;
use crate::infofn::{log_space, Excitation, InformationFunction};
use crate::model::{quadratic_example, QuadraticModel, SystemModel};
use crate::regret::{
    aggregate_regret, regret_approx, schedule_upper_bound, ExplorationSchedule, RegretReport,
    Strategy, StrategyKind,
};
use crate::scheduler::immediate_condition;
use crate::stats::{mean_stderr, pairwise_sum};

/// Log-spaced grid. For exponent grids `lo < hi < 0` and the magnitudes
/// are log-spaced; values run from `lo` up to `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
}

impl GridSpec {
    pub fn constants(&self) -> Vec<f64> {
        log_space(self.lo, self.hi, self.count)
    }

    pub fn exponents(&self) -> Vec<f64> {
        log_space(-self.lo, -self.hi, self.count)
            .into_iter()
            .map(|m| -m)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    /// Tuned by the regret upper bound.
    A,
    /// Tuned by the simulated regret.
    B,
}

impl Design {
    pub fn as_str(self) -> &'static str {
        match self {
            Design::A => "a",
            Design::B => "b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    A,
    B,
    Both,
}

impl DesignMode {
    pub fn designs(self) -> &'static [Design] {
        match self {
            DesignMode::A => &[Design::A],
            DesignMode::B => &[Design::B],
            DesignMode::Both => &[Design::A, Design::B],
        }
    }

    fn needs_empirical_grid(self) -> bool {
        self != DesignMode::A
    }
}

/// How the design-time bound obtains `u₀*` when the true parameter is not used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignPlugin {
    /// Average the bound over replicates, each evaluated at its own
    /// initialization estimate.
    PerReplicate,
    /// Evaluate the bound once at the bank-mean initialization estimate.
    MeanEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignSource {
    Oracle,
    PerReplicate,
    MeanEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta0_list: Vec<f64>,
    pub horizon: usize,
    pub sigma2: f64,
    pub n_mc: usize,
    pub constants_grid: GridSpec,
    pub exponent_grid: GridSpec,
    pub master_seed: u64,
    pub design_mode: DesignMode,
    pub oracle_design: bool,
    pub design_plugin: DesignPlugin,
    /// Deterministic input of the initialization experiment.
    pub init_input: f64,
    /// Overrides `i₀ = 𝕀₀/J_θ²` from the initialization experiment.
    pub i0: Option<f64>,
    /// System whose cumulative-regret trajectories are recorded.
    pub trajectory_theta0: Option<f64>,
    /// Cap on `replicates × steps` simulated by one experiment.
    pub max_replicate_steps: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            theta0_list: vec![-2.0, -0.7, -0.5, -0.4, -0.3, 0.2, 0.4, 0.7, 1.0, 3.0],
            horizon: 50,
            sigma2: 1.0,
            n_mc: 1000,
            constants_grid: GridSpec {
                count: 301,
                lo: 1e-3,
                hi: 1e2,
            },
            exponent_grid: GridSpec {
                count: 21,
                lo: -20.0,
                hi: -0.1,
            },
            master_seed: 2024,
            design_mode: DesignMode::Both,
            oracle_design: false,
            design_plugin: DesignPlugin::PerReplicate,
            init_input: 1.0,
            i0: None,
            trajectory_theta0: Some(0.4),
            max_replicate_steps: 100_000_000_000,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta0_list.is_empty() || self.theta0_list.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid(
                "theta0_list",
                "must be a non-empty list of finite values",
            ));
        }
        if self.horizon < 2 {
            return Err(Error::invalid(
                "horizon",
                format!("must be at least 2, got {}", self.horizon),
            ));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::invalid(
                "sigma2",
                format!("must be positive, got {}", self.sigma2),
            ));
        }
        if self.n_mc == 0 {
            return Err(Error::invalid("n_mc", "must be at least 1"));
        }
        let c = self.constants_grid;
        if c.count == 0 || !(c.lo > 0.0 && c.lo < c.hi && c.hi.is_finite()) {
            return Err(Error::invalid(
                "constants_grid",
                "need count >= 1 and 0 < lo < hi",
            ));
        }
        let p = self.exponent_grid;
        if p.count == 0 || !(p.lo < p.hi && p.hi < 0.0 && p.lo.is_finite()) {
            return Err(Error::invalid(
                "exponent_grid",
                "need count >= 1 and lo < hi < 0",
            ));
        }
        if !(self.init_input.is_finite() && self.init_input != 0.0) {
            return Err(Error::invalid("init_input", "must be finite and non-zero"));
        }
        if let Some(i0) = self.i0 {
            if !(i0 > 0.0 && i0.is_finite()) {
                return Err(Error::invalid("i0", format!("must be positive, got {i0}")));
            }
        }
        Ok(())
    }

    /// Tuning candidates of a strategy family, in grid order
    /// (constants outer, exponents inner).
    pub fn candidates(&self, kind: StrategyKind) -> Result<Vec<Strategy>> {
        let consts = self.constants_grid.constants();
        Ok(match kind {
            StrategyKind::Lazy => vec![Strategy::Lazy],
            StrategyKind::ImmediateGaussian => consts
                .into_iter()
                .map(|x_g| Strategy::ImmediateGaussian { x_g })
                .collect(),
            StrategyKind::ImmediateBinary => consts
                .into_iter()
                .map(|x_b| Strategy::ImmediateBinary { x_b })
                .collect(),
            StrategyKind::DecayingGaussian => {
                let exps = self.exponent_grid.exponents();
                consts
                    .iter()
                    .flat_map(|&c| {
                        exps.iter()
                            .map(move |&p| Strategy::DecayingGaussian { c, p })
                    })
                    .collect()
            }
            StrategyKind::Explicit => {
                return Err(Error::invalid(
                    "strategy",
                    "explicit schedules have no tuning grid",
                ))
            }
        })
    }

    /// Replicate-steps needed by [`run_experiment`].
    pub fn replicate_steps(&self) -> u128 {
        let points: usize = StrategyKind::STUDY
            .iter()
            .map(|&k| self.candidates(k).map_or(0, |c| c.len()))
            .sum();
        self.theta0_list.len() as u128 * points as u128 * self.n_mc as u128 * self.horizon as u128
    }

    fn design_source(&self) -> DesignSource {
        match (self.oracle_design, self.design_plugin) {
            (true, _) => DesignSource::Oracle,
            (false, DesignPlugin::PerReplicate) => DesignSource::PerReplicate,
            (false, DesignPlugin::MeanEstimate) => DesignSource::MeanEstimate,
        }
    }
}

/// One replicate's noise: `e₀..e_T` and the matching `ᾱ₁..ᾱ_T`.
#[derive(Debug, Clone, Copy)]
pub struct NoiseRow<'a> {
    pub e: &'a [f64],
    pub alpha: &'a [f64],
}

impl NoiseBank {
    pub fn row(&self, r: usize, excitation: Excitation) -> NoiseRow<'_> {
        NoiseRow {
            e: self.e_row(r),
            alpha: self.alpha_row(r, excitation),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateTrajectory {
    pub inputs: Vec<f64>,
    pub regrets: Vec<f64>,
}

#[inline]
fn simulate<M: SystemModel + ?Sized>(
    model: &M,
    variances: &[f64],
    noise: NoiseRow<'_>,
    u_init: f64,
    mut visit: impl FnMut(f64, f64),
) -> Result<()> {
    let horizon = variances.len();
    if noise.e.len() < horizon + 1 || noise.alpha.len() < horizon {
        return Err(Error::invalid(
            "noise_row",
            format!("too short for horizon {horizon}"),
        ));
    }
    let sigma = model.sigma2().sqrt();
    let mut est = init_experiment(model, u_init, sigma * noise.e[0])?;
    for ((x, alpha), e) in variances.iter().zip(noise.alpha).zip(&noise.e[1..]) {
        let u = model.optimal_input(est.theta_hat) + x.sqrt() * alpha;
        visit(u, model.instantaneous_regret(u));
        let y = model.measure(u, sigma * e);
        est = est.observe(model.measurement_dtheta(u, est.theta_hat), y);
    }
    Ok(())
}

/// Runs one closed-loop replicate and records applied inputs and per-step regret.
pub fn run_replicate<M: SystemModel + ?Sized>(
    model: &M,
    schedule: &ExplorationSchedule,
    noise: NoiseRow<'_>,
    u_init: f64,
) -> Result<ReplicateTrajectory> {
    let mut out = ReplicateTrajectory {
        inputs: Vec::with_capacity(schedule.horizon()),
        regrets: Vec::with_capacity(schedule.horizon()),
    };
    simulate(model, schedule.variances(), noise, u_init, |u, r| {
        out.inputs.push(u);
        out.regrets.push(r);
    })?;
    Ok(out)
}

fn replicate_total<M: SystemModel + ?Sized>(
    model: &M,
    variances: &[f64],
    noise: NoiseRow<'_>,
    u_init: f64,
) -> Result<f64> {
    let mut total = 0.0;
    simulate(model, variances, noise, u_init, |_, r| total += r)?;
    Ok(total)
}

/// Mean cumulative regret of a schedule over the bank, with its standard error.
pub fn empirical_total<M: SystemModel + ?Sized>(
    model: &M,
    schedule: &ExplorationSchedule,
    bank: &NoiseBank,
    u_init: f64,
) -> Result<Estimate> {
    check_bank(bank, schedule.horizon())?;
    let totals = (0..bank.n_mc())
        .map(|r| {
            replicate_total(
                model,
                schedule.variances(),
                bank.row(r, schedule.excitation()),
                u_init,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_stderr(&totals);
    Ok(Estimate { mean, stderr })
}

fn check_bank(bank: &NoiseBank, horizon: usize) -> Result<()> {
    if bank.horizon() != horizon {
        return Err(Error::invalid(
            "bank",
            format!(
                "bank horizon {} does not match schedule horizon {horizon}",
                bank.horizon()
            ),
        ));
    }
    if bank.n_mc() == 0 {
        return Err(Error::EmptyReplicates);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Design-time view of one system: `i₀` and the `u₀*` values the bound is
/// evaluated at.
#[derive(Debug, Clone)]
pub struct Designer {
    source: DesignSource,
    sigma2: f64,
    j_theta: f64,
    i0: f64,
    representative_u0: f64,
    gaussian: Vec<InformationFunction>,
    binary: Vec<InformationFunction>,
}

impl Designer {
    pub fn new(
        model: &QuadraticModel,
        config: &ExperimentConfig,
        bank: &NoiseBank,
    ) -> Result<Self> {
        let (sigma2, j) = (model.sigma2(), model.j_theta());
        let i0 = match config.i0 {
            Some(v) => v,
            None => {
                let g = model.measurement_dtheta(config.init_input, model.theta0());
                g * g / sigma2 / (j * j)
            }
        };
        let source = config.design_source();
        let estimates = || -> Result<Vec<f64>> {
            (0..bank.n_mc())
                .map(|r| {
                    let est = init_experiment(
                        model,
                        config.init_input,
                        sigma2.sqrt() * bank.e_row(r)[0],
                    )?;
                    Ok(model.optimal_input(est.theta_hat))
                })
                .collect()
        };
        let (points, representative_u0) = match source {
            DesignSource::Oracle => (vec![model.u0_star()], model.u0_star()),
            DesignSource::MeanEstimate | DesignSource::PerReplicate => {
                let u = estimates()?;
                let mean = pairwise_sum(&u) / u.len() as f64;
                if source == DesignSource::MeanEstimate {
                    (vec![mean], mean)
                } else {
                    (u, mean)
                }
            }
        };
        let build = |e| {
            points
                .iter()
                .map(|&u| InformationFunction::for_model(e, u, sigma2, j))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            source,
            sigma2,
            j_theta: j,
            i0,
            representative_u0,
            gaussian: build(Excitation::Gaussian)?,
            binary: build(Excitation::Binary)?,
        })
    }

    pub fn source(&self) -> DesignSource {
        self.source
    }

    pub fn i0(&self) -> f64 {
        self.i0
    }

    /// `u₀*` used for single-point summaries such as the immediate condition.
    pub fn representative_u0(&self) -> f64 {
        self.representative_u0
    }

    fn fns(&self, e: Excitation) -> &[InformationFunction] {
        match e {
            Excitation::Gaussian => &self.gaussian,
            Excitation::Binary => &self.binary,
        }
    }

    fn average(
        &self,
        e: Excitation,
        f: impl Fn(&InformationFunction) -> Result<f64>,
    ) -> Result<f64> {
        let v = self.fns(e).iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(pairwise_sum(&v) / v.len() as f64)
    }

    /// Design-time `R_ub` of a full schedule (final variance charged linearly).
    pub fn upper_bound(&self, schedule: &ExplorationSchedule) -> Result<f64> {
        self.average(schedule.excitation(), |f| {
            schedule_upper_bound(f, self.i0, schedule.variances())
        })
    }

    /// Design-time `R̃` of a full schedule.
    pub fn approx(&self, schedule: &ExplorationSchedule) -> Result<f64> {
        let x = schedule.variances();
        let (last, head) = x.split_last().expect("schedules are non-empty");
        self.average(schedule.excitation(), |f| {
            Ok(regret_approx(f, self.i0, head, x.len())? + last)
        })
    }

    /// Left side of the immediate-exploration condition at the
    /// representative `u₀*`.
    pub fn condition_lhs(&self, excitation: Excitation, horizon: usize) -> Result<f64> {
        Ok(immediate_condition(&self.information_function(excitation)?, self.i0, horizon)?.0)
    }

    /// Normalized information function at the representative `u₀*`.
    pub fn information_function(&self, excitation: Excitation) -> Result<InformationFunction> {
        InformationFunction::for_model(
            excitation,
            self.representative_u0,
            self.sigma2,
            self.j_theta,
        )
    }
}

/// Evaluates one strategy on the bank: empirical regret with per-step
/// trajectory, and the design-time `R_ub` and `R̃`.
pub fn run_strategy(
    model: &QuadraticModel,
    strategy: Strategy,
    config: &ExperimentConfig,
    bank: &NoiseBank,
) -> Result<RegretReport> {
    let designer = Designer::new(model, config, bank)?;
    run_strategy_with(model, strategy, config, bank, &designer)
}

pub fn run_strategy_with(
    model: &QuadraticModel,
    strategy: Strategy,
    config: &ExperimentConfig,
    bank: &NoiseBank,
    designer: &Designer,
) -> Result<RegretReport> {
    let schedule = ExplorationSchedule::new(strategy, config.horizon)?;
    check_bank(bank, schedule.horizon())?;
    let per_step = (0..bank.n_mc())
        .into_par_iter()
        .map(|r| {
            run_replicate(
                model,
                &schedule,
                bank.row(r, schedule.excitation()),
                config.init_input,
            )
            .map(|t| t.regrets)
        })
        .collect::<Result<Vec<_>>>()?;
    let agg = aggregate_regret(&per_step)?;
    Ok(RegretReport {
        empirical: agg.mean,
        empirical_stderr: agg.stderr,
        approx: Some(designer.approx(&schedule)?),
        upper_bound: designer.upper_bound(&schedule)?,
        trajectory: agg.trajectory,
        trajectory_stderr: agg.trajectory_stderr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub strategy: Strategy,
    pub upper_bound: f64,
    /// Present for every point when design (b) is requested, otherwise only
    /// at the design (a) optimum.
    pub empirical: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub kind: StrategyKind,
    pub points: Vec<GridPoint>,
    pub best_a: usize,
    pub best_b: Option<usize>,
}

impl GridSearch {
    pub fn best(&self, design: Design) -> Option<&GridPoint> {
        match design {
            Design::A => self.points.get(self.best_a),
            Design::B => self.best_b.and_then(|i| self.points.get(i)),
        }
    }
}

/// Index of the smallest value; ties go to the lowest index.
fn argmin(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if best.map_or(true, |(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Scores every tuning candidate of `kind` and picks the design (a) and,
/// if requested, design (b) optima.
pub fn grid_search(
    model: &QuadraticModel,
    kind: StrategyKind,
    config: &ExperimentConfig,
    bank: &NoiseBank,
) -> Result<GridSearch> {
    let designer = Designer::new(model, config, bank)?;
    grid_search_with(model, kind, config, bank, &designer)
}

pub fn grid_search_with(
    model: &QuadraticModel,
    kind: StrategyKind,
    config: &ExperimentConfig,
    bank: &NoiseBank,
    designer: &Designer,
) -> Result<GridSearch> {
    let all_empirical = config.design_mode.needs_empirical_grid();
    let mut points = config
        .candidates(kind)?
        .into_par_iter()
        .map(|strategy| {
            let schedule = ExplorationSchedule::new(strategy, config.horizon)?;
            let upper_bound = designer.upper_bound(&schedule)?;
            let empirical = if all_empirical {
                Some(empirical_total(model, &schedule, bank, config.init_input)?)
            } else {
                None
            };
            Ok(GridPoint {
                strategy,
                upper_bound,
                empirical,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best_a = argmin(points.iter().map(|p| p.upper_bound)).ok_or(Error::EmptyReplicates)?;
    let best_b = if all_empirical {
        argmin(
            points
                .iter()
                .map(|p| p.empirical.map_or(f64::INFINITY, |e| e.mean)),
        )
    } else {
        None
    };
    if points[best_a].empirical.is_none() {
        let schedule = ExplorationSchedule::new(points[best_a].strategy, config.horizon)?;
        points[best_a].empirical =
            Some(empirical_total(model, &schedule, bank, config.init_input)?);
    }
    Ok(GridSearch {
        kind,
        points,
        best_a,
        best_b,
    })
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub kind: StrategyKind,
    pub design: Design,
    pub tuning: Strategy,
    pub empirical: f64,
    pub empirical_stderr: f64,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySeries {
    pub kind: StrategyKind,
    pub design: Design,
    pub tuning: Strategy,
    pub report: RegretReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemResult {
    pub theta0: f64,
    pub u0_star: f64,
    pub design_source: DesignSource,
    pub design_u0_star: f64,
    pub i0: f64,
    pub condition_lhs_gaussian: f64,
    pub condition_lhs_binary: f64,
    pub rows: Vec<TuningRow>,
    pub trajectories: Vec<TrajectorySeries>,
    #[serde(skip)]
    pub grids: Vec<GridSearch>,
}

impl SystemResult {
    pub fn row(&self, kind: StrategyKind, design: Design) -> Option<&TuningRow> {
        self.rows
            .iter()
            .find(|r| r.kind == kind && r.design == design)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankDigest {
    pub master_seed: u64,
    pub n_mc: usize,
    pub horizon: usize,
    pub measurement_sha256: String,
    pub gaussian_sha256: String,
    pub binary_sha256: String,
}

impl BankDigest {
    pub fn of(bank: &NoiseBank) -> Self {
        let hex = |d: [u8; 32]| d.iter().map(|b| format!("{b:02x}")).collect::<String>();
        Self {
            master_seed: bank.master_seed(),
            n_mc: bank.n_mc(),
            horizon: bank.horizon(),
            measurement_sha256: hex(bank.e_checksum()),
            gaussian_sha256: hex(bank.alpha_checksum(Excitation::Gaussian)),
            binary_sha256: hex(bank.alpha_checksum(Excitation::Binary)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub bank: BankDigest,
    pub systems: Vec<SystemResult>,
}

/// Runs the full study: every system, every strategy family, every
/// requested design.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults> {
    config.validate()?;
    let required = config.replicate_steps();
    if required > config.max_replicate_steps as u128 {
        return Err(Error::BudgetExceeded {
            required,
            cap: config.max_replicate_steps as u128,
        });
    }
    let bank = NoiseBank::generate(config.master_seed, config.n_mc, config.horizon);
    run_experiment_with_bank(config, &bank)
}

pub fn run_experiment_with_bank(
    config: &ExperimentConfig,
    bank: &NoiseBank,
) -> Result<ExperimentResults> {
    config.validate()?;
    check_bank(bank, config.horizon)?;
    let systems = config
        .theta0_list
        .iter()
        .map(|&theta0| run_system(theta0, config, bank))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResults {
        config: config.clone(),
        bank: BankDigest::of(bank),
        systems,
    })
}

fn run_system(theta0: f64, config: &ExperimentConfig, bank: &NoiseBank) -> Result<SystemResult> {
    let model = quadratic_example(theta0, config.sigma2)?;
    let designer = Designer::new(&model, config, bank)?;
    log::info!(
        "theta0 = {theta0}: i0 = {}, design u0* = {}",
        designer.i0(),
        designer.representative_u0()
    );
    let record = config.trajectory_theta0 == Some(theta0);
    let mut rows = Vec::new();
    let mut trajectories = Vec::new();
    let mut grids = Vec::new();
    for kind in StrategyKind::STUDY {
        let grid = grid_search_with(&model, kind, config, bank, &designer)?;
        for &design in config.design_mode.designs() {
            let point = grid.best(design).expect("requested designs are searched");
            let est = point.empirical.expect("optima carry an empirical estimate");
            rows.push(TuningRow {
                kind,
                design,
                tuning: point.strategy,
                empirical: est.mean,
                empirical_stderr: est.stderr,
                upper_bound: point.upper_bound,
            });
            if record {
                let report = run_strategy_with(&model, point.strategy, config, bank, &designer)?;
                trajectories.push(TrajectorySeries {
                    kind,
                    design,
                    tuning: point.strategy,
                    report,
                });
            }
        }
        grids.push(grid);
    }
    Ok(SystemResult {
        theta0,
        u0_star: model.u0_star(),
        design_source: designer.source(),
        design_u0_star: designer.representative_u0(),
        i0: designer.i0(),
        condition_lhs_gaussian: designer.condition_lhs(Excitation::Gaussian, config.horizon)?,
        condition_lhs_binary: designer.condition_lhs(Excitation::Binary, config.horizon)?,
        rows,
        trajectories,
        grids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            theta0_list: vec![0.4],
            horizon: 10,
            n_mc: 40,
            constants_grid: GridSpec {
                count: 7,
                lo: 1e-2,
                hi: 10.0,
            },
            exponent_grid: GridSpec {
                count: 4,
                lo: -4.0,
                hi: -0.5,
            },
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn default_grids() {
        let c = ExperimentConfig::default();
        let p = c.exponent_grid.exponents();
        assert_eq!(p.len(), 21);
        assert_eq!(p[0], -20.0);
        assert_eq!(p[20], -0.1);
        assert!((p[8] + 2.402).abs() < 1e-3);
        let k = c.constants_grid.constants();
        assert_eq!((k[0], k[300], k.len()), (1e-3, 1e2, 301));
        assert_eq!(
            c.replicate_steps(),
            10 * (1 + 301 + 301 + 301 * 21) * 1000 * 50
        );
    }

    #[test]
    fn validation_names_the_field() {
        let bad = ExperimentConfig {
            horizon: 1,
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidArgument {
                name: "horizon",
                ..
            })
        ));
        let bad = ExperimentConfig {
            exponent_grid: GridSpec {
                count: 3,
                lo: -1.0,
                hi: 0.5,
            },
            ..ExperimentConfig::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(Error::InvalidArgument {
                name: "exponent_grid",
                ..
            })
        ));
    }

    #[test]
    fn lazy_replicate_uses_certainty_equivalent_input() {
        let model = quadratic_example(0.4, 1.0).unwrap();
        let e = [0.5, -0.2, 0.1];
        let alpha = [9.0, 9.0];
        let schedule = ExplorationSchedule::new(Strategy::Lazy, 2).unwrap();
        let run = run_replicate(
            &model,
            &schedule,
            NoiseRow {
                e: &e,
                alpha: &alpha,
            },
            1.0,
        )
        .unwrap();
        // θ̂ after init: y = 0.4 + 0.5 with g = 1.
        assert!((run.inputs[0] - (-1.9)).abs() < 1e-12);
        let u1 = run.inputs[0];
        let y1 = 0.4 * u1 * u1 - 0.2;
        let g1 = u1 * u1;
        let theta = (0.9 + g1 * y1) / (1.0 + g1 * g1);
        assert!((run.inputs[1] + theta + 1.0).abs() < 1e-12);
        assert!((run.regrets[1] - (run.inputs[1] + 1.4).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn run_strategy_matches_fast_total() {
        let cfg = small();
        let bank = NoiseBank::generate(cfg.master_seed, cfg.n_mc, cfg.horizon);
        let model = quadratic_example(0.4, 1.0).unwrap();
        let s = Strategy::ImmediateBinary { x_b: 2.0 };
        let rep = run_strategy(&model, s, &cfg, &bank).unwrap();
        let fast = empirical_total(
            &model,
            &ExplorationSchedule::new(s, cfg.horizon).unwrap(),
            &bank,
            1.0,
        )
        .unwrap();
        assert!((rep.empirical - fast.mean).abs() <= 1e-12 * fast.mean.abs().max(1.0));
        assert_eq!(rep.trajectory.len(), cfg.horizon);
        assert!(rep.trajectory.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn design_b_is_grid_minimum() {
        let cfg = small();
        let bank = NoiseBank::generate(cfg.master_seed, cfg.n_mc, cfg.horizon);
        let model = quadratic_example(0.4, 1.0).unwrap();
        let g = grid_search(&model, StrategyKind::DecayingGaussian, &cfg, &bank).unwrap();
        assert_eq!(g.points.len(), 28);
        let b = g.best(Design::B).unwrap().empirical.unwrap().mean;
        assert!(g.points.iter().all(|p| p.empirical.unwrap().mean >= b));
        let a = g.best(Design::A).unwrap().upper_bound;
        assert!(g.points.iter().all(|p| p.upper_bound >= a));
    }

    #[test]
    fn design_a_only_skips_grid_simulation() {
        let cfg = ExperimentConfig {
            design_mode: DesignMode::A,
            ..small()
        };
        let bank = NoiseBank::generate(cfg.master_seed, cfg.n_mc, cfg.horizon);
        let model = quadratic_example(0.4, 1.0).unwrap();
        let g = grid_search(&model, StrategyKind::ImmediateGaussian, &cfg, &bank).unwrap();
        assert_eq!(g.points.iter().filter(|p| p.empirical.is_some()).count(), 1);
        assert!(g.best_b.is_none());
    }

    #[test]
    fn experiment_is_deterministic_and_budgeted() {
        let cfg = small();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.systems[0].rows.len(), 8);
        assert_eq!(a.systems[0].trajectories.len(), 8);
        let capped = ExperimentConfig {
            max_replicate_steps: 10,
            ..cfg
        };
        assert!(matches!(
            run_experiment(&capped),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn oracle_design_uses_true_input() {
        let cfg = ExperimentConfig {
            oracle_design: true,
            ..small()
        };
        let bank = NoiseBank::generate(1, 5, cfg.horizon);
        let model = quadratic_example(-2.0, 1.0).unwrap();
        let d = Designer::new(&model, &cfg, &bank).unwrap();
        assert_eq!(d.representative_u0(), 1.0);
        assert_eq!(d.source(), DesignSource::Oracle);
        assert_eq!(d.i0(), 1.0);
    }
}
