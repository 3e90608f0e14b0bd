//! Minimization of the regret upper bound over exploration schedules.
//!
//! For a non-negative, increasing and convex `i`, the minimizer of
//!
//! ```text
//! C(x) = Σ_{t=1}^{T−1} 1/(i₀ + Σ_{s≤t} i(x_s)) + Σ_{t=1}^{T−1} x_t,   x ≥ 0
//! ```
//!
//! explores only at the first step (or not at all), so the search collapses
//! to the scalar function `g(x₁) = C(x₁, 0, …, 0)`. Exploring is guaranteed
//! to pay off when `g′(0) < 0`, i.e. when
//! `Σ_{t=1}^{T−1} i′(0)/(i₀ + t·i(0))² > 1`.
//!
//! The stationarity multipliers of the bound-constrained problem are
//!
//! ```text
//! λ_k = 1 − i′(x_k) · Σ_{t=k}^{T−1} 1/(i₀ + Σ_{s≤t} i(x_s))²
//! ```
//!
//! and a solution is certified by `λ ≥ 0` and `λ_k·x_k = 0`.
//! [`brute_force_verify`] checks the structural claim directly by exhaustive
//! evaluation over a grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infofn::{log_space, InformationFunction};
use crate::regret::upper_bound_unchecked;

/// Variances below this count as zero when classifying a schedule.
pub const ZERO_VARIANCE: f64 = 1e-9;
/// Lazy wins ties within this margin.
pub const TIE_TOLERANCE: f64 = 1e-12;
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-8;
pub const COMPLEMENTARITY_TOL: f64 = 1e-8;
pub const DEFAULT_X_MAX: f64 = 100.0;
pub const SCAN_POINTS: usize = 301;
pub const X_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_EVAL_BUDGET: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Lazy,
    Immediate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub kind: ScheduleKind,
    pub x1: f64,
    /// `R_ub` at the solution, including the constant `1/i₀`.
    pub bound_value: f64,
    pub condition_lhs: f64,
    pub kkt_residuals: Vec<f64>,
    /// The minimizer sits at `x_max`; the search interval was too small.
    pub at_upper_limit: bool,
}

impl ScheduleSolution {
    pub fn dual_feasible(&self) -> bool {
        self.kkt_residuals
            .iter()
            .all(|&l| l >= -DUAL_FEASIBILITY_TOL)
    }

    pub fn complementary(&self) -> bool {
        self.kkt_residuals
            .first()
            .map_or(true, |l| (l * self.x1).abs() <= COMPLEMENTARITY_TOL)
    }

    pub fn kkt_satisfied(&self) -> bool {
        self.dual_feasible() && self.complementary()
    }
}

fn check_args(i0: f64, horizon: usize) -> Result<()> {
    if horizon < 2 {
        return Err(Error::invalid(
            "horizon",
            format!("must be at least 2, got {horizon}"),
        ));
    }
    if !(i0 > 0.0 && i0.is_finite()) {
        return Err(Error::invalid("i0", format!("must be positive, got {i0}")));
    }
    Ok(())
}

/// Left side of the immediate-exploration condition and whether it exceeds 1.
pub fn immediate_condition(
    ifn: &InformationFunction,
    i0: f64,
    horizon: usize,
) -> Result<(f64, bool)> {
    check_args(i0, horizon)?;
    let (d0, i_zero) = (ifn.deriv(0.0), ifn.eval(0.0));
    let lhs: f64 = (1..horizon)
        .map(|t| {
            let den = i0 + t as f64 * i_zero;
            d0 / (den * den)
        })
        .sum();
    Ok((lhs, lhs > 1.0))
}

/// Largest `i₀` for which the immediate condition still holds. `None` when
/// it fails for every `i₀ > 0`.
pub fn critical_prior_information(
    ifn: &InformationFunction,
    horizon: usize,
) -> Result<Option<f64>> {
    let lhs = |i0: f64| immediate_condition(ifn, i0, horizon).map(|r| r.0);
    let mut lo = 1e-12;
    if lhs(lo)? <= 1.0 {
        return Ok(None);
    }
    let mut hi = 1.0;
    while lhs(hi)? > 1.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Ok(Some(f64::INFINITY));
        }
    }
    while hi / lo - 1.0 > 1e-13 {
        let mid = (lo * hi).sqrt();
        if lhs(mid)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// `R_ub` of the schedule `(x₁, 0, …, 0)`.
#[inline]
fn immediate_bound(i1: f64, i_zero: f64, i0: f64, horizon: usize, x1: f64) -> f64 {
    let mut info = i0 + i1;
    let mut total = 1.0 / i0 + x1;
    for _ in 1..horizon {
        total += 1.0 / info;
        info += i_zero;
    }
    total
}

struct Immediate<'a> {
    ifn: &'a InformationFunction,
    i0: f64,
    i_zero: f64,
    horizon: usize,
}

impl Immediate<'_> {
    fn value(&self, x1: f64) -> f64 {
        immediate_bound(self.ifn.eval(x1), self.i_zero, self.i0, self.horizon, x1)
    }

    /// `g′(x₁) = λ₁` at `(x₁, 0, …, 0)`.
    fn slope(&self, x1: f64) -> f64 {
        let mut info = self.i0 + self.ifn.eval(x1);
        let mut s = 0.0;
        for _ in 1..self.horizon {
            s += 1.0 / (info * info);
            info += self.i_zero;
        }
        1.0 - self.ifn.deriv(x1) * s
    }
}

/// Bisection on `g′` over `[a, b]` when it changes sign from − to +.
fn slope_root(g: &Immediate<'_>, mut a: f64, mut b: f64) -> Option<f64> {
    if !(g.slope(a) < 0.0 && g.slope(b) > 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if g.slope(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(if g.slope(a).abs() <= g.slope(b).abs() {
        a
    } else {
        b
    })
}

/// Golden-section search on `[lo, hi]`. Returns `(x, f(x), lo, hi)` where
/// the final bracket `[lo, hi]` has width at most `tol`.
pub fn golden_section<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64, f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut iters = 0;
    while hi - lo > tol && iters < 500 {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
        iters += 1;
    }
    if fa <= fb {
        (a, fa, lo, hi)
    } else {
        (b, fb, lo, hi)
    }
}

/// Minimizes `R_ub` over lazy and immediate schedules with `x₁ ∈ [0, x_max]`.
pub fn optimize_schedule(
    ifn: &InformationFunction,
    i0: f64,
    horizon: usize,
    x_max: f64,
) -> Result<ScheduleSolution> {
    check_args(i0, horizon)?;
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::invalid(
            "x_max",
            format!("must be positive, got {x_max}"),
        ));
    }
    let (condition_lhs, sufficient) = immediate_condition(ifn, i0, horizon)?;
    let g = Immediate {
        ifn,
        i0,
        i_zero: ifn.eval(0.0),
        horizon,
    };

    let mut pts = vec![0.0];
    pts.extend(log_space(x_max * 1e-9, x_max, SCAN_POINTS));
    let vals: Vec<f64> = pts.iter().map(|&x| g.value(x)).collect();
    let k = argmin_first(&vals);
    let lo = pts[k.saturating_sub(1)];
    let hi = pts[(k + 1).min(pts.len() - 1)];
    let tol = X_TOLERANCE.min((hi - lo) * 1e-6).max(f64::EPSILON);
    let (mut x1, mut fx, blo, bhi) = golden_section(|x| g.value(x), lo, hi, tol);
    if vals[k] < fx {
        (x1, fx) = (pts[k], vals[k]);
    }

    // Drive λ₁ = g′(x₁) to zero; the analytic slope is sharper than the
    // value comparisons of the golden-section search.
    for (a, b) in [(lo, hi), (blo, bhi)] {
        if let Some(root) = slope_root(&g, a, b) {
            let froot = g.value(root);
            if froot <= fx + TIE_TOLERANCE {
                (x1, fx) = (root, froot);
                break;
            }
        }
    }

    let lazy_value = vals[0];
    let immediate = x1 > ZERO_VARIANCE && (lazy_value - fx > TIE_TOLERANCE || sufficient);
    let (kind, x1, bound_value) = if immediate {
        (ScheduleKind::Immediate, x1, fx)
    } else {
        (ScheduleKind::Lazy, 0.0, lazy_value)
    };
    let at_upper_limit = kind == ScheduleKind::Immediate && x1 >= x_max * (1.0 - 1e-6);
    if at_upper_limit {
        log::warn!("optimal first-step variance sits at the search limit x_max = {x_max}; widen the interval");
    }
    let mut x = vec![0.0; horizon - 1];
    x[0] = x1;
    let kkt_residuals = kkt_certificate(ifn, i0, &x, horizon)?;
    Ok(ScheduleSolution {
        kind,
        x1,
        bound_value,
        condition_lhs,
        kkt_residuals,
        at_upper_limit,
    })
}

fn argmin_first(vals: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in vals.iter().enumerate() {
        if v < vals[best] {
            best = k;
        }
    }
    best
}

/// Multipliers `λ₁..λ_{T−1}` of the non-negativity constraints at `x`.
pub fn kkt_certificate(
    ifn: &InformationFunction,
    i0: f64,
    x: &[f64],
    horizon: usize,
) -> Result<Vec<f64>> {
    check_args(i0, horizon)?;
    if x.len() != horizon - 1 {
        return Err(Error::invalid(
            "x",
            format!("expected {} variances, got {}", horizon - 1, x.len()),
        ));
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::invalid("x", format!("infeasible variance {v}")));
    }
    let mut info = i0;
    let inv_sq: Vec<f64> = x
        .iter()
        .map(|&xt| {
            info += ifn.eval(xt);
            1.0 / (info * info)
        })
        .collect();
    let mut suffix = vec![0.0; x.len()];
    let mut acc = 0.0;
    for k in (0..x.len()).rev() {
        acc += inv_sq[k];
        suffix[k] = acc;
    }
    Ok(x.iter()
        .zip(&suffix)
        .map(|(&xk, &s)| 1.0 - ifn.deriv(xk) * s)
        .collect())
}

/// Outcome of exhaustive evaluation of `R_ub` over a product grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceReport {
    pub argmin: Vec<f64>,
    pub min_value: f64,
    /// Entries `2..T−1` of the argmin are all zero.
    pub tail_zero: bool,
    pub non_increasing: bool,
    pub optimizer: ScheduleSolution,
    /// `min_value − optimizer.bound_value`.
    pub gap: f64,
    /// Variation of the one-dimensional bound across the grid cell holding
    /// the optimizer's `x₁`.
    pub cell_tolerance: f64,
    pub evaluations: u128,
}

impl BruteForceReport {
    /// Lazy-or-immediate structure, ordering, and agreement with the 1-D search.
    pub fn consistent(&self) -> bool {
        let slack = 1e-12 * self.min_value.abs().max(1.0);
        self.tail_zero
            && self.non_increasing
            && self.gap >= -slack
            && self.gap <= self.cell_tolerance + slack
    }
}

/// Evaluates `R_ub` at every point of `grid^(T−1)` and compares the argmin
/// with [`optimize_schedule`]. Ties resolve to the lexicographically first
/// grid point, so the result does not depend on the thread count.
pub fn brute_force_verify(
    ifn: &InformationFunction,
    i0: f64,
    horizon: usize,
    grid: &[f64],
    budget: u128,
) -> Result<BruteForceReport> {
    check_args(i0, horizon)?;
    if !grid.contains(&0.0) {
        return Err(Error::invalid("grid", "must contain 0"));
    }
    if let Some(v) = grid.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::invalid("grid", format!("invalid variance {v}")));
    }
    let dims = horizon - 1;
    let evaluations = (grid.len() as u128)
        .checked_pow(dims as u32)
        .unwrap_or(u128::MAX);
    if evaluations > budget {
        return Err(Error::BudgetExceeded {
            required: evaluations,
            cap: budget,
        });
    }

    let info: Vec<f64> = grid.iter().map(|&x| ifn.eval(x)).collect();
    let best = (0..grid.len())
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; dims];
            idx[0] = first;
            let mut best = (f64::INFINITY, Vec::new());
            let start_info = i0 + info[first];
            let start_cost = 1.0 / i0 + 1.0 / start_info + grid[first];
            search(grid, &info, &mut idx, 1, start_info, start_cost, &mut best);
            best
        })
        .reduce_with(|a, b| {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        })
        .expect("grid is non-empty");
    let (min_value, best_idx) = best;
    let argmin: Vec<f64> = best_idx.iter().map(|&k| grid[k]).collect();
    let tail_zero = argmin.iter().skip(1).all(|&v| v == 0.0);
    let non_increasing = argmin.windows(2).all(|w| w[0] >= w[1]);

    let optimizer = optimize_schedule(
        ifn,
        i0,
        horizon,
        DEFAULT_X_MAX.max(grid.iter().cloned().fold(0.0, f64::max)),
    )?;
    let g = Immediate {
        ifn,
        i0,
        i_zero: ifn.eval(0.0),
        horizon,
    };
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let upper = sorted.iter().copied().find(|&v| v >= optimizer.x1);
    let lower = sorted.iter().rev().copied().find(|&v| v <= optimizer.x1);
    let cell_tolerance = [lower, upper]
        .into_iter()
        .flatten()
        .map(|v| g.value(v))
        .fold(f64::NEG_INFINITY, f64::max)
        - optimizer.bound_value;

    Ok(BruteForceReport {
        gap: min_value - optimizer.bound_value,
        argmin,
        min_value,
        tail_zero,
        non_increasing,
        optimizer,
        cell_tolerance,
        evaluations,
    })
}

fn search(
    grid: &[f64],
    info: &[f64],
    idx: &mut Vec<usize>,
    depth: usize,
    acc_info: f64,
    acc_cost: f64,
    best: &mut (f64, Vec<usize>),
) {
    if depth == idx.len() {
        if acc_cost < best.0 {
            *best = (acc_cost, idx.clone());
        }
        return;
    }
    for k in 0..grid.len() {
        idx[depth] = k;
        let next = acc_info + info[k];
        search(
            grid,
            info,
            idx,
            depth + 1,
            next,
            acc_cost + 1.0 / next + grid[k],
            best,
        );
    }
}

/// `R_ub` at an arbitrary design vector; used by property tests and the CLI.
pub fn bound_at(ifn: &InformationFunction, i0: f64, x: &[f64]) -> f64 {
    upper_bound_unchecked(ifn, i0, x)
}
