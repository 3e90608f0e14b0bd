//! Scalar systems under optimization.
//!
//! A system is described by a cost `Φ(u, θ)`, a measurement map `h(u, θ)`
//! observed through additive Gaussian noise, and the optimal-input map
//! `U(θ) = argmin_u Φ(u, θ)`. The true parameter `θ₀` is known to the
//! simulator only; controllers see it through noisy measurements.
//!
//! Noise realizations are always supplied by the caller, so that common
//! random numbers can be shared across strategies.

use crate::error::{Error, Result};

/// Step used by the central finite-difference fallbacks.
pub const FD_STEP: f64 = 1e-6;

/// A scalar plant with a single unknown parameter.
///
/// Implementors supply the cost, measurement and optimal-input maps.
/// The sensitivities `J_θ = dU/dθ` and `H_u = ∂²Φ/∂u²` default to central
/// finite differences at `θ₀` and may be overridden with exact values.
pub trait SystemModel: Send + Sync {
    fn theta0(&self) -> f64;
    fn sigma2(&self) -> f64;
    fn cost(&self, u: f64, theta: f64) -> f64;
    /// Noise-free part of the measurement.
    fn measurement(&self, u: f64, theta: f64) -> f64;
    fn measurement_dtheta(&self, u: f64, theta: f64) -> f64;
    fn optimal_input(&self, theta: f64) -> f64;

    fn j_theta(&self) -> f64 {
        let th = self.theta0();
        (self.optimal_input(th + FD_STEP) - self.optimal_input(th - FD_STEP)) / (2.0 * FD_STEP)
    }

    fn h_u(&self) -> f64 {
        let th = self.theta0();
        let u = self.optimal_input(th);
        // Second differences need a coarser step to stay above round-off.
        let h = 1e-4;
        (self.cost(u + h, th) - 2.0 * self.cost(u, th) + self.cost(u - h, th)) / (h * h)
    }

    /// `u₀* = U(θ₀)`.
    fn u0_star(&self) -> f64 {
        self.optimal_input(self.theta0())
    }

    /// `y = h(u, θ₀) + noise`.
    fn measure(&self, u: f64, noise: f64) -> f64 {
        self.measurement(u, self.theta0()) + noise
    }

    /// `Φ(u, θ₀) − Φ(u₀*, θ₀)`.
    fn instantaneous_regret(&self, u: f64) -> f64 {
        let th = self.theta0();
        self.cost(u, th) - self.cost(self.u0_star(), th)
    }
}

/// `Φ(u, θ) = u² + 2(θ+1)u`, measured through `h(u, θ) = θu²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticModel {
    theta0: f64,
    sigma2: f64,
}

/// Builds the quadratic example system.
pub fn quadratic_example(theta0: f64, sigma2: f64) -> Result<QuadraticModel> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::invalid(
            "sigma2",
            format!("must be positive and finite, got {sigma2}"),
        ));
    }
    if !theta0.is_finite() {
        return Err(Error::invalid("theta0", "must be finite"));
    }
    Ok(QuadraticModel { theta0, sigma2 })
}

impl SystemModel for QuadraticModel {
    fn theta0(&self) -> f64 {
        self.theta0
    }

    fn sigma2(&self) -> f64 {
        self.sigma2
    }

    #[inline]
    fn cost(&self, u: f64, theta: f64) -> f64 {
        u * u + 2.0 * (theta + 1.0) * u
    }

    #[inline]
    fn measurement(&self, u: f64, theta: f64) -> f64 {
        theta * u * u
    }

    #[inline]
    fn measurement_dtheta(&self, u: f64, _theta: f64) -> f64 {
        u * u
    }

    #[inline]
    fn optimal_input(&self, theta: f64) -> f64 {
        -(theta + 1.0)
    }

    fn j_theta(&self) -> f64 {
        -1.0
    }

    fn h_u(&self) -> f64 {
        2.0
    }

    // (u − u₀*)² exactly; the cost difference form loses digits far from u₀*.
    #[inline]
    fn instantaneous_regret(&self, u: f64) -> f64 {
        let d = u - self.u0_star();
        d * d
    }
}
