//! Incremental information functions.
//!
//! With exploration `α ~ (0, x)` added to the certainty-equivalence input and
//! an estimation error `δ ~ N(0, a)` (`a = 𝕀⁻¹`, already multiplied by `J_θ²`),
//! the expected information gained from one step of the quadratic example is
//! proportional to the fourth moment `E[(u₀* + δ + α)⁴]`. Odd moments vanish
//! and `α`, `δ` are independent, which leaves
//!
//! ```text
//! E[(u₀* + δ + α)⁴] = m₄(x) + 6(u₀*² + a)·x + 3a² + 6u₀*²·a + u₀*⁴
//! ```
//!
//! where `m₄(x) = E[α⁴]` is `3x²` for Gaussian exploration and `x²` for
//! symmetric ±√x (binary) exploration. Only the `m₄` term depends on the
//! excitation family. Setting `a = 0` gives the one-argument function `i(x)`
//! used by the regret upper bound.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the unit-variance exploration base `ᾱₜ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Excitation {
    Gaussian,
    Binary,
}

impl Excitation {
    /// `E[ᾱ⁴]` for the unit-variance base.
    pub fn kurtosis(self) -> f64 {
        match self {
            Excitation::Gaussian => 3.0,
            Excitation::Binary => 1.0,
        }
    }
}

impl fmt::Display for Excitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Excitation::Gaussian => "gaussian",
            Excitation::Binary => "binary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Binary,
    Custom,
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Moment {
        excitation: Excitation,
        u0_star_sq: f64,
        scale: f64,
    },
    Custom {
        eval: ScalarFn,
        deriv: ScalarFn,
    },
}

/// The map `x ↦ i(x)` together with its right derivative.
#[derive(Clone)]
pub struct InformationFunction {
    repr: Repr,
}

impl fmt::Debug for InformationFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Moment {
                excitation,
                u0_star_sq,
                scale,
            } => f
                .debug_struct("InformationFunction")
                .field("family", excitation)
                .field("u0_star_sq", u0_star_sq)
                .field("scale", scale)
                .finish(),
            Repr::Custom { .. } => f
                .debug_struct("InformationFunction")
                .field("family", &"custom")
                .finish_non_exhaustive(),
        }
    }
}

/// `i(x) = 3x² + 6u₀*²x + u₀*⁴`.
pub fn gaussian_info(u0_star: f64) -> InformationFunction {
    InformationFunction::moment(Excitation::Gaussian, u0_star)
}

/// `i(x) = x² + 6u₀*²x + u₀*⁴`.
pub fn binary_info(u0_star: f64) -> InformationFunction {
    InformationFunction::moment(Excitation::Binary, u0_star)
}

impl InformationFunction {
    pub fn moment(excitation: Excitation, u0_star: f64) -> Self {
        Self {
            repr: Repr::Moment {
                excitation,
                u0_star_sq: u0_star * u0_star,
                scale: 1.0,
            },
        }
    }

    /// Information function in the normalized units of the regret bound,
    /// i.e. divided by `σ²·J_θ²`.
    pub fn for_model(
        excitation: Excitation,
        u0_star: f64,
        sigma2: f64,
        j_theta: f64,
    ) -> Result<Self> {
        let denom = sigma2 * j_theta * j_theta;
        if !(denom > 0.0 && denom.is_finite()) {
            return Err(Error::invalid(
                "sigma2·j_theta²",
                format!("must be positive, got {denom}"),
            ));
        }
        let Repr::Moment { u0_star_sq, .. } = Self::moment(excitation, u0_star).repr else {
            unreachable!()
        };
        Ok(Self {
            repr: Repr::Moment {
                excitation,
                u0_star_sq,
                scale: 1.0 / denom,
            },
        })
    }

    /// User-supplied `i` and `i′`, accepted only if they pass
    /// [`validate_assumption`](Self::validate_assumption).
    pub fn custom<F, D>(eval: F, deriv: D) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f = Self {
            repr: Repr::Custom {
                eval: Arc::new(eval),
                deriv: Arc::new(deriv),
            },
        };
        f.validate_assumption()?;
        Ok(f)
    }

    /// `i(x) = Σ cₖ xᵏ`, validated like any custom function.
    pub fn polynomial(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "coeffs",
                "need at least one finite coefficient",
            ));
        }
        let c: Arc<[f64]> = coeffs.into();
        let d = c.clone();
        Self::custom(
            move |x| c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            move |x| {
                d.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck)
            },
        )
    }

    pub fn family(&self) -> Family {
        match &self.repr {
            Repr::Moment {
                excitation: Excitation::Gaussian,
                ..
            } => Family::Gaussian,
            Repr::Moment {
                excitation: Excitation::Binary,
                ..
            } => Family::Binary,
            Repr::Custom { .. } => Family::Custom,
        }
    }

    pub fn excitation(&self) -> Option<Excitation> {
        match &self.repr {
            Repr::Moment { excitation, .. } => Some(*excitation),
            Repr::Custom { .. } => None,
        }
    }

    pub fn u0_star_sq(&self) -> Option<f64> {
        match &self.repr {
            Repr::Moment { u0_star_sq, .. } => Some(*u0_star_sq),
            Repr::Custom { .. } => None,
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Moment {
                excitation,
                u0_star_sq,
                scale,
            } => {
                let u2 = *u0_star_sq;
                scale * (excitation.kurtosis() * x * x + 6.0 * u2 * x + u2 * u2)
            }
            Repr::Custom { eval, .. } => eval(x),
        }
    }

    /// Right derivative `i′(x)`; at `x = 0` this is the one-sided derivative.
    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Moment {
                excitation,
                u0_star_sq,
                scale,
            } => scale * (2.0 * excitation.kurtosis() * x + 6.0 * u0_star_sq),
            Repr::Custom { deriv, .. } => deriv(x),
        }
    }

    /// Two-argument information `𝓘(x, a)` in the same units as [`eval`](Self::eval).
    /// Custom functions have no second argument and are rejected.
    pub fn full(&self, x: f64, info_inv: f64) -> Result<f64> {
        match &self.repr {
            Repr::Moment {
                excitation,
                u0_star_sq,
                scale,
            } => Ok(scale * fourth_moment(*excitation, *u0_star_sq, x, info_inv)?),
            Repr::Custom { .. } => Err(Error::invalid(
                "ifn",
                "custom information functions have no estimation-error term",
            )),
        }
    }

    /// Checks non-negativity, monotonicity and convexity of `i` on `{0} ∪ [1e-6, 1e3]`.
    pub fn validate_assumption(&self) -> Result<()> {
        let mut grid = vec![0.0];
        grid.extend(log_space(1e-6, 1e3, 400));
        let mut prev: Option<(f64, f64, f64)> = None;
        for &x in &grid {
            let (v, d) = (self.eval(x), self.deriv(x));
            if !v.is_finite() || !d.is_finite() {
                return Err(Error::AssumptionViolated(format!(
                    "non-finite value at x = {x}"
                )));
            }
            let tol = 1e-10 * v.abs().max(d.abs()).max(1.0);
            if v < -tol {
                return Err(Error::AssumptionViolated(format!("i({x}) = {v} < 0")));
            }
            if d < -tol {
                return Err(Error::AssumptionViolated(format!("i'({x}) = {d} < 0")));
            }
            if let Some((px, pv, pd)) = prev {
                if v < pv - tol {
                    return Err(Error::AssumptionViolated(format!(
                        "i decreases between {px} and {x}"
                    )));
                }
                if d < pd - tol {
                    return Err(Error::AssumptionViolated(format!(
                        "i' decreases between {px} and {x} (not convex)"
                    )));
                }
            }
            prev = Some((x, v, d));
        }
        Ok(())
    }
}

/// `n` points spaced evenly in `log10` between `lo` and `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == n - 1 {
                        hi
                    } else {
                        10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

fn fourth_moment(excitation: Excitation, u2: f64, x: f64, a: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::invalid(
            "x",
            format!("exploration variance must be >= 0, got {x}"),
        ));
    }
    if !(a >= 0.0) {
        return Err(Error::invalid("info_inv", format!("must be >= 0, got {a}")));
    }
    Ok(excitation.kurtosis() * x * x + 6.0 * (u2 + a) * x + 3.0 * a * a + 6.0 * u2 * a + u2 * u2)
}

/// `𝓘(x, 𝕀⁻¹)` for the quadratic example with `σ² = J_θ² = 1`.
///
/// The binary case swaps `3x²` for `x²`: a ±√x base has `E[α⁴] = x²`, and
/// every cross moment with the Gaussian estimation error is unchanged.
pub fn full_incremental_info(
    excitation: Excitation,
    u0_star: f64,
    x: f64,
    info_inv: f64,
) -> Result<f64> {
    fourth_moment(excitation, u0_star * u0_star, x, info_inv)
}

/// Returns `(analytic, sampled)` values of `E[(u₀* + δ + α)⁴]` with
/// `δ ~ N(0, info_inv)` and `α` drawn from the excitation family with variance `x`.
pub fn moment_expansion_check(
    excitation: Excitation,
    u0_star: f64,
    x: f64,
    info_inv: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let analytic = full_incremental_info(excitation, u0_star, x, info_inv)?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sd_delta, sd_alpha) = (info_inv.sqrt(), x.sqrt());
    // Running mean: exact when every sample is identical.
    let mut mean = 0.0;
    for k in 1..=n_samples {
        let delta: f64 = sd_delta * rng.sample::<f64, _>(StandardNormal);
        let base = match excitation {
            Excitation::Gaussian => rng.sample::<f64, _>(StandardNormal),
            Excitation::Binary => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        };
        let v = (u0_star + delta + sd_alpha * base).powi(4);
        mean += (v - mean) / k as f64;
    }
    Ok((analytic, mean))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn gaussian_values() {
        assert_abs_diff_eq!(gaussian_info(-1.4).eval(0.0), 3.8416, epsilon = 1e-12);
        assert_eq!(gaussian_info(0.0).eval(1.0), 3.0);
        assert_eq!(gaussian_info(-1.0).eval(1.0), 10.0);
        assert_eq!(gaussian_info(-1.0).deriv(0.0), 6.0);
        assert_eq!(gaussian_info(-1.0).deriv(2.0), 18.0);
    }

    #[test]
    fn binary_values() {
        assert_eq!(binary_info(-1.0).eval(1.0), 8.0);
        assert_eq!(binary_info(0.0).eval(2.0), 4.0);
        for u in [-2.0, -0.3, 0.0, 1.7] {
            assert_eq!(binary_info(u).eval(0.0), gaussian_info(u).eval(0.0));
        }
        assert_eq!(binary_info(-1.0).deriv(1.0), 8.0);
    }

    #[test]
    fn full_values() {
        assert_eq!(
            full_incremental_info(Excitation::Gaussian, -1.0, 0.0, 0.0).unwrap(),
            1.0
        );
        // 3x² + 6(u² + a)x + 3a² + 6u²a + u⁴ = 3 + 12 + 3 + 6 + 1
        assert_eq!(
            full_incremental_info(Excitation::Gaussian, -1.0, 1.0, 1.0).unwrap(),
            25.0
        );
        assert!(full_incremental_info(Excitation::Gaussian, -1.0, -1.0, 0.0).is_err());
        assert!(full_incremental_info(Excitation::Binary, -1.0, 1.0, -0.5).is_err());
        let f = gaussian_info(-1.3);
        assert_abs_diff_eq!(f.full(0.7, 0.0).unwrap(), f.eval(0.7), epsilon = 1e-12);
    }

    #[test]
    fn scaled_for_model() {
        let f = InformationFunction::for_model(Excitation::Gaussian, -1.0, 2.0, -1.0).unwrap();
        assert_eq!(f.eval(1.0), 5.0);
        assert_eq!(f.deriv(0.0), 3.0);
        assert!(InformationFunction::for_model(Excitation::Gaussian, -1.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn moment_check_degenerate_cases() {
        let (a, m) =
            moment_expansion_check(Excitation::Gaussian, -1.3, 0.0, 0.0, 10_000, 7).unwrap();
        assert_eq!(a, 1.3f64.powi(4));
        assert_eq!(m, a);
        let (a, m) = moment_expansion_check(Excitation::Binary, 0.0, 1.0, 0.0, 10_000, 7).unwrap();
        assert_eq!((a, m), (1.0, 1.0));
    }

    #[test]
    fn moment_check_gaussian_sampling() {
        let (a, m) =
            moment_expansion_check(Excitation::Gaussian, -1.0, 1.0, 0.0, 1_000_000, 11).unwrap();
        assert_eq!(a, 10.0);
        assert!((m - a).abs() / a < 0.01, "{m}");
    }

    #[test]
    fn polynomial_and_validator() {
        let f = InformationFunction::polynomial(&[1.0, 6.0, 3.0]).unwrap();
        assert_eq!(f.family(), Family::Custom);
        assert_eq!(f.eval(1.0), gaussian_info(1.0).eval(1.0));
        assert_eq!(f.deriv(1.0), gaussian_info(1.0).deriv(1.0));
        assert!(f.full(1.0, 0.1).is_err());

        // concave
        assert!(matches!(
            InformationFunction::polynomial(&[1.0, 2.0, -0.1]),
            Err(Error::AssumptionViolated(_))
        ));
        // decreasing
        assert!(InformationFunction::polynomial(&[5.0, -1.0]).is_err());
        assert!(InformationFunction::custom(|x: f64| x.sqrt(), |x: f64| 0.5 / x.sqrt()).is_err());
    }

    #[test]
    fn log_space_endpoints() {
        let g = log_space(1e-3, 1e2, 301);
        assert_eq!(g.len(), 301);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[300], 1e2);
        assert_abs_diff_eq!(g[60], 1e-2, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn shipped_families_satisfy_assumption(u in -5.0f64..5.0) {
            prop_assert!(gaussian_info(u).validate_assumption().is_ok());
            prop_assert!(binary_info(u).validate_assumption().is_ok());
        }

        #[test]
        fn estimation_error_only_adds_information(u in -5.0f64..5.0, x in 0.0f64..100.0, a in 0.0f64..10.0) {
            for e in [Excitation::Gaussian, Excitation::Binary] {
                let with = full_incremental_info(e, u, x, a).unwrap();
                let without = full_incremental_info(e, u, x, 0.0).unwrap();
                prop_assert!(with >= without);
            }
        }

        #[test]
        fn binary_never_exceeds_gaussian(u in -5.0f64..5.0, x in 0.0f64..100.0) {
            let (b, g) = (binary_info(u).eval(x), gaussian_info(u).eval(x));
            prop_assert!(b <= g);
            prop_assert_eq!(b == g, x == 0.0);
        }
    }
}
