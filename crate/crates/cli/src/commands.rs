//! Subcommand implementations. Each writes its files into the output
//! directory, finishes with `manifest.json`, and prints a short table.
//!
//! | command           | files                                                   |
//! |-------------------|---------------------------------------------------------|
//! | `plan`            | `plan.json`                                             |
//! | `check-condition` | `condition.json`                                        |
//! | `simulate`        | `simulate.csv`, `simulate.json`                         |
//! | `reproduce`       | `table1.csv`, `fig2_data.csv`, `summary.json`           |
//! | `verify`          | `verify.json`                                           |
//! | `sweep`           | `sweep.csv`                                             |
//!
//! CSV schemas:
//!
//! - `table1.csv`: `theta0,strategy,design,x,c,p,mean_regret,stderr,upper_bound,condition_lhs`.
//!   `x` is set for immediate strategies, `c` and `p` for decaying Gaussian.
//! - `fig2_data.csv` and `simulate.csv`: `theta0,strategy,design,t,mean_cumulative_regret,stderr`
//!   for `t = 1..T` (`design` is empty for `simulate`).
//! - `sweep.csv`: `theta0,strategy,index,x,c,p,upper_bound,mean_regret,stderr,best_a,best_b`.
//!   `mean_regret` is empty where design (b) was not requested.

use std::io::Write;

use exploration_design::mc::{grid_search_with, Designer, ExperimentResults, NoiseBank};
use exploration_design::{
    brute_force_verify, critical_prior_information, immediate_condition, optimize_schedule,
    quadratic_example, run_experiment, Excitation, InformationFunction, RegretReport,
    ScheduleSolution, Strategy, StrategyKind,
};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, opt, Csv, OutputDir, RunManifest};

const EXCITATIONS: [Excitation; 2] = [Excitation::Gaussian, Excitation::Binary];

fn out_err(e: std::io::Error) -> CliError {
    CliError::io("<stdout>", e)
}

fn design_bank(cfg: &RunConfig) -> NoiseBank {
    let e = &cfg.experiment;
    NoiseBank::generate(e.master_seed, e.n_mc, e.horizon)
}

/// `(x, c, p)` columns of a tuning.
fn tuning_fields(s: &Strategy) -> [Option<f64>; 3] {
    match *s {
        Strategy::Lazy | Strategy::Explicit { .. } => [None; 3],
        Strategy::ImmediateGaussian { x_g: x } | Strategy::ImmediateBinary { x_b: x } => {
            [Some(x), None, None]
        }
        Strategy::DecayingGaussian { c, p } => [None, Some(c), Some(p)],
    }
}

fn describe(s: &Strategy) -> String {
    match *s {
        Strategy::Lazy => "-".into(),
        Strategy::ImmediateGaussian { x_g } => format!("x_g={x_g:.4}"),
        Strategy::ImmediateBinary { x_b } => format!("x_b={x_b:.4}"),
        Strategy::DecayingGaussian { c, p } => format!("c={c:.4} p={p:.3}"),
        Strategy::Explicit { .. } => "explicit".into(),
    }
}

/// Builds a strategy from a family name and its tuning values.
pub fn strategy_from(kind: StrategyKind, tuning: &[f64]) -> Result<Strategy, CliError> {
    let arity = |n: usize| {
        if tuning.len() == n {
            Ok(())
        } else {
            Err(CliError::Config(format!(
                "strategy `{kind}` takes {n} tuning value(s), got {}",
                tuning.len()
            )))
        }
    };
    let s = match kind {
        StrategyKind::Lazy => arity(0).map(|_| Strategy::Lazy)?,
        StrategyKind::ImmediateGaussian => {
            arity(1).map(|_| Strategy::ImmediateGaussian { x_g: tuning[0] })?
        }
        StrategyKind::ImmediateBinary => {
            arity(1).map(|_| Strategy::ImmediateBinary { x_b: tuning[0] })?
        }
        StrategyKind::DecayingGaussian => arity(2).map(|_| Strategy::DecayingGaussian {
            c: tuning[0],
            p: tuning[1],
        })?,
        StrategyKind::Explicit => {
            return Err(CliError::Config(
                "explicit schedules cannot be given on the command line".into(),
            ))
        }
    };
    s.validate()?;
    Ok(s)
}

#[derive(Debug, Serialize)]
struct PlanEntry {
    theta0: f64,
    excitation: Excitation,
    design_u0_star: f64,
    i0: f64,
    condition_lhs: f64,
    condition_holds: bool,
    solution: ScheduleSolution,
}

/// Optimal first-step variance per system and excitation family.
pub fn cmd_plan(
    cfg: &RunConfig,
    mut out: OutputDir,
    w: &mut dyn Write,
) -> Result<RunManifest, CliError> {
    let e = &cfg.experiment;
    let bank = design_bank(cfg);
    let mut entries = Vec::new();
    writeln!(
        w,
        "{:>7} {:>9} {:>9} {:>8} {:>10} {:>10} {:>10} {:>10}",
        "theta0", "family", "u0*", "i0", "kind", "x1", "bound", "condition"
    )
    .map_err(out_err)?;
    for &theta0 in &e.theta0_list {
        let model = quadratic_example(theta0, e.sigma2)?;
        let designer = Designer::new(&model, e, &bank)?;
        for excitation in EXCITATIONS {
            let ifn = designer.information_function(excitation)?;
            let solution = optimize_schedule(&ifn, designer.i0(), e.horizon, cfg.plan.x_max)?;
            let (lhs, holds) = immediate_condition(&ifn, designer.i0(), e.horizon)?;
            writeln!(
                w,
                "{theta0:>7} {:>9} {:>9.4} {:>8.4} {:>10} {:>10.5} {:>10.5} {:>10.4}",
                excitation.to_string(),
                designer.representative_u0(),
                designer.i0(),
                format!("{:?}", solution.kind).to_lowercase(),
                solution.x1,
                solution.bound_value,
                lhs
            )
            .map_err(out_err)?;
            entries.push(PlanEntry {
                theta0,
                excitation,
                design_u0_star: designer.representative_u0(),
                i0: designer.i0(),
                condition_lhs: lhs,
                condition_holds: holds,
                solution,
            });
        }
    }
    out.write_json("plan.json", &entries)?;
    out.finish("plan", cfg)
}

/// Immediate-exploration condition per system, with the largest `i₀` for
/// which it would still hold.
pub fn cmd_check_condition(
    cfg: &RunConfig,
    mut out: OutputDir,
    w: &mut dyn Write,
) -> Result<RunManifest, CliError> {
    let e = &cfg.experiment;
    let bank = design_bank(cfg);
    let mut entries = Vec::new();
    writeln!(
        w,
        "{:>7} {:>9} {:>9} {:>8} {:>10} {:>6} {:>12}",
        "theta0", "family", "u0*", "i0", "lhs", "holds", "i0_critical"
    )
    .map_err(out_err)?;
    for &theta0 in &e.theta0_list {
        let model = quadratic_example(theta0, e.sigma2)?;
        let designer = Designer::new(&model, e, &bank)?;
        for excitation in EXCITATIONS {
            let ifn = designer.information_function(excitation)?;
            let (lhs, holds) = immediate_condition(&ifn, designer.i0(), e.horizon)?;
            let critical = critical_prior_information(&ifn, e.horizon)?;
            writeln!(
                w,
                "{theta0:>7} {:>9} {:>9.4} {:>8.4} {lhs:>10.4} {:>6} {:>12}",
                excitation.to_string(),
                designer.representative_u0(),
                designer.i0(),
                holds,
                critical.map_or("none".to_string(), |c| format!("{c:.4}"))
            )
            .map_err(out_err)?;
            entries.push(json!({
                "theta0": theta0,
                "excitation": excitation,
                "design_u0_star": designer.representative_u0(),
                "i0": designer.i0(),
                "condition_lhs": lhs,
                "condition_holds": holds,
                "i0_critical": critical,
            }));
        }
    }
    out.write_json("condition.json", &entries)?;
    out.finish("check-condition", cfg)
}

fn trajectory_rows(
    csv: &mut Csv,
    theta0: f64,
    kind: StrategyKind,
    design: &str,
    report: &RegretReport,
) {
    for (t, (m, s)) in report
        .trajectory
        .iter()
        .zip(&report.trajectory_stderr)
        .enumerate()
    {
        csv.row(&[
            num(theta0),
            kind.to_string(),
            design.to_string(),
            (t + 1).to_string(),
            num(*m),
            num(*s),
        ]);
    }
}

const TRAJECTORY_HEADER: [&str; 6] = [
    "theta0",
    "strategy",
    "design",
    "t",
    "mean_cumulative_regret",
    "stderr",
];

/// Evaluates one fixed strategy on every configured system.
pub fn cmd_simulate(
    cfg: &RunConfig,
    strategy: Strategy,
    mut out: OutputDir,
    w: &mut dyn Write,
) -> Result<RunManifest, CliError> {
    let e = &cfg.experiment;
    let bank = design_bank(cfg);
    let mut csv = Csv::new(&TRAJECTORY_HEADER);
    let mut reports = Vec::new();
    for &theta0 in &e.theta0_list {
        let model = quadratic_example(theta0, e.sigma2)?;
        let designer = Designer::new(&model, e, &bank)?;
        let report =
            exploration_design::mc::run_strategy_with(&model, strategy, e, &bank, &designer)?;
        writeln!(
            w,
            "theta0 = {theta0}: mean regret {:.4} ± {:.4}, bound {:.4}",
            report.empirical, report.empirical_stderr, report.upper_bound
        )
        .map_err(out_err)?;
        trajectory_rows(&mut csv, theta0, strategy.kind(), "", &report);
        reports.push(json!({ "theta0": theta0, "strategy": strategy, "report": report }));
    }
    out.write("simulate.csv", &csv.into_bytes())?;
    out.write_json("simulate.json", &reports)?;
    out.finish("simulate", cfg)
}

fn summary_json(results: &ExperimentResults) -> serde_json::Value {
    let systems: Vec<_> = results
        .systems
        .iter()
        .map(|s| {
            let rows: Vec<_> = s
                .rows
                .iter()
                .map(|r| {
                    json!({
                        "strategy": r.kind,
                        "design": r.design,
                        "tuning": r.tuning,
                        "mean_regret": r.empirical,
                        "stderr": r.empirical_stderr,
                        "upper_bound": r.upper_bound,
                        "condition_lhs": condition_for(s, r.kind),
                    })
                })
                .collect();
            json!({
                "theta0": s.theta0,
                "u0_star": s.u0_star,
                "design_source": s.design_source,
                "design_u0_star": s.design_u0_star,
                "i0": s.i0,
                "rows": rows,
            })
        })
        .collect();
    json!({ "bank": results.bank, "systems": systems })
}

fn condition_for(s: &exploration_design::mc::SystemResult, kind: StrategyKind) -> f64 {
    match kind.excitation() {
        Excitation::Gaussian => s.condition_lhs_gaussian,
        Excitation::Binary => s.condition_lhs_binary,
    }
}

/// Full study: tuned regret table for every system and the trajectories of
/// the recorded system.
pub fn cmd_reproduce(
    cfg: &RunConfig,
    mut out: OutputDir,
    w: &mut dyn Write,
) -> Result<RunManifest, CliError> {
    let results = run_experiment(&cfg.experiment)?;
    let mut table = Csv::new(&[
        "theta0",
        "strategy",
        "design",
        "x",
        "c",
        "p",
        "mean_regret",
        "stderr",
        "upper_bound",
        "condition_lhs",
    ]);
    let mut fig = Csv::new(&TRAJECTORY_HEADER);
    writeln!(
        w,
        "{:>7} {:>18} {:>6} {:>20} {:>10} {:>8} {:>10}",
        "theta0", "strategy", "design", "tuning", "regret", "stderr", "bound"
    )
    .map_err(out_err)?;
    for s in &results.systems {
        for r in &s.rows {
            let [x, c, p] = tuning_fields(&r.tuning);
            table.row(&[
                num(s.theta0),
                r.kind.to_string(),
                r.design.as_str().to_string(),
                opt(x),
                opt(c),
                opt(p),
                num(r.empirical),
                num(r.empirical_stderr),
                num(r.upper_bound),
                num(condition_for(s, r.kind)),
            ]);
            writeln!(
                w,
                "{:>7} {:>18} {:>6} {:>20} {:>10.4} {:>8.4} {:>10.4}",
                s.theta0,
                r.kind.to_string(),
                r.design.as_str(),
                describe(&r.tuning),
                r.empirical,
                r.empirical_stderr,
                r.upper_bound
            )
            .map_err(out_err)?;
        }
        for tr in &s.trajectories {
            trajectory_rows(&mut fig, s.theta0, tr.kind, tr.design.as_str(), &tr.report);
        }
    }
    out.write("table1.csv", &table.into_bytes())?;
    out.write("fig2_data.csv", &fig.into_bytes())?;
    out.write_json("summary.json", &summary_json(&results))?;
    out.finish("reproduce", cfg)
}

#[derive(Debug, Serialize)]
struct VerifyEntry {
    family: String,
    u0_star: Option<f64>,
    horizon: usize,
    i0: f64,
    pass: bool,
    tail_zero: bool,
    non_increasing: bool,
    kkt_satisfied: bool,
    grid_argmin: Vec<f64>,
    grid_min: f64,
    optimizer_x1: f64,
    optimizer_bound: f64,
    gap: f64,
    cell_tolerance: f64,
}

/// Exhaustive small-horizon check of the lazy-or-immediate structure,
/// ordering, agreement with the 1-D optimizer, and the KKT certificate.
pub fn cmd_verify(
    cfg: &RunConfig,
    verbose: bool,
    mut out: OutputDir,
    w: &mut dyn Write,
) -> Result<RunManifest, CliError> {
    let v = &cfg.verify;
    let grid = v.grid();
    let mut instances: Vec<(String, Option<f64>, InformationFunction)> = Vec::new();
    for &u0 in &v.u0_values {
        for e in EXCITATIONS {
            instances.push((e.to_string(), Some(u0), InformationFunction::moment(e, u0)));
        }
    }
    for c in &v.custom {
        instances.push((c.name.clone(), None, c.build()?));
    }
    let mut entries = Vec::new();
    for &horizon in &v.horizons {
        for &i0 in &v.i0_values {
            for (family, u0, ifn) in &instances {
                let r = brute_force_verify(ifn, i0, horizon, &grid, v.max_evaluations as u128)?;
                let kkt = r.optimizer.kkt_satisfied();
                let pass = r.consistent() && kkt;
                let label = u0.map_or(String::new(), |u| format!(" u0*={u}"));
                write!(
                    w,
                    "{} T={horizon} i0={i0}{label} {family}: x1={:.5} bound={:.6} grid_min={:.6}",
                    if pass { "PASS" } else { "FAIL" },
                    r.optimizer.x1,
                    r.optimizer.bound_value,
                    r.min_value
                )
                .map_err(out_err)?;
                if verbose || !pass {
                    write!(
                        w,
                        " argmin={:?} tail_zero={} non_increasing={} kkt={kkt}",
                        r.argmin, r.tail_zero, r.non_increasing
                    )
                    .map_err(out_err)?;
                }
                writeln!(w).map_err(out_err)?;
                entries.push(VerifyEntry {
                    family: family.clone(),
                    u0_star: *u0,
                    horizon,
                    i0,
                    pass,
                    tail_zero: r.tail_zero,
                    non_increasing: r.non_increasing,
                    kkt_satisfied: kkt,
                    grid_argmin: r.argmin,
                    grid_min: r.min_value,
                    optimizer_x1: r.optimizer.x1,
                    optimizer_bound: r.optimizer.bound_value,
                    gap: r.gap,
                    cell_tolerance: r.cell_tolerance,
                });
            }
        }
    }
    let failed = entries.iter().filter(|e| !e.pass).count();
    writeln!(
        w,
        "{} of {} instances passed",
        entries.len() - failed,
        entries.len()
    )
    .map_err(out_err)?;
    out.write_json("verify.json", &entries)?;
    let manifest = out.finish("verify", cfg)?;
    if failed > 0 {
        return Err(CliError::Verification(format!(
            "{failed} of {} instances violated the structure",
            entries.len()
        )));
    }
    Ok(manifest)
}

/// Raw grid-search matrices for every system and strategy family.
pub fn cmd_sweep(
    cfg: &RunConfig,
    mut out: OutputDir,
    w: &mut dyn Write,
) -> Result<RunManifest, CliError> {
    let e = &cfg.experiment;
    let required = e.replicate_steps();
    if required > e.max_replicate_steps as u128 {
        return Err(exploration_design::Error::BudgetExceeded {
            required,
            cap: e.max_replicate_steps as u128,
        }
        .into());
    }
    let bank = design_bank(cfg);
    let mut csv = Csv::new(&[
        "theta0",
        "strategy",
        "index",
        "x",
        "c",
        "p",
        "upper_bound",
        "mean_regret",
        "stderr",
        "best_a",
        "best_b",
    ]);
    for &theta0 in &e.theta0_list {
        let model = quadratic_example(theta0, e.sigma2)?;
        let designer = Designer::new(&model, e, &bank)?;
        for kind in StrategyKind::STUDY {
            let g = grid_search_with(&model, kind, e, &bank, &designer)?;
            for (i, pt) in g.points.iter().enumerate() {
                let [x, c, p] = tuning_fields(&pt.strategy);
                csv.row(&[
                    num(theta0),
                    kind.to_string(),
                    i.to_string(),
                    opt(x),
                    opt(c),
                    opt(p),
                    num(pt.upper_bound),
                    opt(pt.empirical.map(|m| m.mean)),
                    opt(pt.empirical.map(|m| m.stderr)),
                    (i == g.best_a).to_string(),
                    (Some(i) == g.best_b).to_string(),
                ]);
            }
            writeln!(
                w,
                "theta0 = {theta0} {kind}: {} points, design (a) picks {}",
                g.points.len(),
                describe(&g.points[g.best_a].strategy)
            )
            .map_err(out_err)?;
        }
    }
    out.write("sweep.csv", &csv.into_bytes())?;
    out.finish("sweep", cfg)
}
