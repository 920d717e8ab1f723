//! Model parameters shared by the analytic law, the calibrator and the simulator.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Size of one pip in price units (EUR/USD convention).
pub const PIP: f64 = 1e-4;

pub fn pips_to_price(pips: f64) -> f64 {
    pips * PIP
}

pub fn price_to_pips(price: f64) -> f64 {
    price / PIP
}

/// Ornstein-Uhlenbeck parameters for `dX = lambda (theta - X) dt + sigma dW`,
/// with time measured in weeks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    /// Long-term mean, in price units.
    pub theta: f64,
    /// Mean-reversion rate, per week.
    pub lambda: f64,
    /// Volatility, in price units per sqrt(week).
    pub sigma: f64,
}

impl OUParams {
    pub fn new(theta: f64, lambda: f64, sigma: f64) -> Result<Self> {
        if !(theta.is_finite() && lambda.is_finite() && sigma.is_finite()) {
            return Err(invalid("OU parameters must be finite"));
        }
        if sigma <= 0.0 {
            return Err(invalid(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { theta, lambda, sigma })
    }

    /// Builds parameters with a prescribed `lambda / sigma^2` ratio.
    pub fn with_kappa(theta: f64, kappa: f64, sigma: f64) -> Result<Self> {
        Self::new(theta, kappa * sigma * sigma, sigma)
    }

    /// The ratio `lambda / sigma^2`, the only combination of the two rates
    /// that enters the stopped-maximum law.
    pub fn kappa(&self) -> f64 {
        self.lambda / (self.sigma * self.sigma)
    }

    /// The model is usable only with a positive reversion rate.
    pub fn is_usable(&self) -> bool {
        self.lambda > 0.0 && self.sigma > 0.0 && self.theta.is_finite() && self.lambda.is_finite()
    }

    /// Stationary variance `sigma^2 / (2 lambda)`.
    pub fn stationary_variance(&self) -> f64 {
        self.sigma * self.sigma / (2.0 * self.lambda)
    }

    /// Reflection `X -> -X`, which maps a short position onto a long one.
    pub fn mirrored(&self) -> Self {
        Self { theta: -self.theta, ..*self }
    }
}
