//! Weighted least-squares estimation and Fisher-information bookkeeping.
//!
//! For a measurement that is linear in the parameter, `y = θ·g(u) + e` with
//! `e ~ N(0, σ²)`, the estimate `θ̂ = Σ g·y / Σ g²` is the Gaussian maximum
//! likelihood estimate. With inputs fixed in advance it is unbiased and its
//! variance equals the inverse Fisher information `σ² / Σ g²`.
//!
//! For the quadratic example `g(u) = u²`, so the running sums are `Σ u²y`
//! and `Σ u⁴`.

use crate::error::{Error, Result};
use crate::model::SystemModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    pub theta_hat: f64,
    /// Accumulated Fisher information, `s_den / σ²`.
    pub info: f64,
    /// Running `Σ g(u)·y`.
    pub s_num: f64,
    /// Running `Σ g(u)²`.
    pub s_den: f64,
    pub sigma2: f64,
}

impl EstimatorState {
    /// A state with no data. The estimate is reported as 0 until the first
    /// informative observation arrives.
    pub fn empty(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::invalid(
                "sigma2",
                format!("must be positive, got {sigma2}"),
            ));
        }
        Ok(Self {
            theta_hat: 0.0,
            info: 0.0,
            s_num: 0.0,
            s_den: 0.0,
            sigma2,
        })
    }

    /// Folds in one observation with regressor `g = ∂h/∂θ`.
    #[inline]
    #[must_use]
    pub fn observe(&self, regressor: f64, y: f64) -> Self {
        let s_num = self.s_num + regressor * y;
        let s_den = self.s_den + regressor * regressor;
        let theta_hat = if s_den > 0.0 {
            s_num / s_den
        } else {
            self.theta_hat
        };
        Self {
            theta_hat,
            info: s_den / self.sigma2,
            s_num,
            s_den,
            sigma2: self.sigma2,
        }
    }

    /// Quadratic-example update: regressor `u²`.
    #[inline]
    #[must_use]
    pub fn update(&self, u: f64, y: f64) -> Self {
        self.observe(u * u, y)
    }

    /// `1/𝕀ₜ`, the idealized mean squared estimation error.
    pub fn estimate_variance_bound(&self) -> Result<f64> {
        if self.info > 0.0 {
            Ok(1.0 / self.info)
        } else {
            Err(Error::ZeroInformation(0.0))
        }
    }
}

/// Runs the initialization experiment: one measurement at `u_init`.
pub fn init_experiment<M: SystemModel + ?Sized>(
    model: &M,
    u_init: f64,
    noise: f64,
) -> Result<EstimatorState> {
    let g = model.measurement_dtheta(u_init, model.theta0());
    if g == 0.0 || !g.is_finite() {
        return Err(Error::ZeroInformation(u_init));
    }
    let y = model.measure(u_init, noise);
    Ok(EstimatorState::empty(model.sigma2())?.observe(g, y))
}

/// Score of one Gaussian observation, `∂/∂θ log p(y | u; θ)`.
pub fn score<M: SystemModel + ?Sized>(model: &M, u: f64, y: f64, theta: f64) -> f64 {
    (y - model.measurement(u, theta)) * model.measurement_dtheta(u, theta) / model.sigma2()
}
