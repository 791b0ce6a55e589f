//! Check loss and asymmetric-Laplace primitives.
//!
//! The asymmetric Laplace density with inverse scale `θ` is
//! `τ(1−τ)θ·exp(−θ ρ_τ(ε))`. It admits the location–scale normal mixture
//! `ε = κ₁ũ + κ₂ √(ũ/θ) W` with `ũ ~ Exp(rate θ)`, `W ~ N(0,1)`, which is
//! what makes the quantile samplers conditionally Gaussian.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A quantile level strictly inside `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau < 1.0 {
            Ok(Self(tau))
        } else {
            Err(Error::invalid(format!("quantile level must lie in (0,1), got {tau}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn median() -> Self {
        Self(0.5)
    }
}

impl TryFrom<f64> for QuantileLevel {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<QuantileLevel> for f64 {
    fn from(q: QuantileLevel) -> f64 {
        q.0
    }
}

/// Mixture-representation constants for a quantile level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AldConstants {
    /// `(1 − 2τ) / (τ(1 − τ))`
    pub kappa1: f64,
    /// `2 / (τ(1 − τ))`
    pub kappa2_sq: f64,
}

impl AldConstants {
    pub fn kappa2(&self) -> f64 {
        self.kappa2_sq.sqrt()
    }

    /// `(κ₁² + 2κ₂²) / κ₂²`, the θ-free factor of the latent-scale update.
    pub fn latent_shape_factor(&self) -> f64 {
        self.kappa1 * self.kappa1 / self.kappa2_sq + 2.0
    }
}

pub fn ald_constants(tau: QuantileLevel) -> AldConstants {
    let t = tau.value();
    let v = t * (1.0 - t);
    AldConstants {
        kappa1: (1.0 - 2.0 * t) / v,
        kappa2_sq: 2.0 / v,
    }
}

/// `ρ_τ(ε) = ε(τ − 1{ε < 0})`.
pub fn check_loss(residual: f64, tau: QuantileLevel) -> f64 {
    let t = tau.value();
    if residual < 0.0 {
        residual * (t - 1.0)
    } else {
        residual * t
    }
}

/// `log[τ(1−τ)θ] − θ ρ_τ(ε)`.
pub fn ald_log_density(residual: f64, theta: f64, tau: QuantileLevel) -> Result<f64> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::invalid(format!("ALD inverse scale must be positive, got {theta}")));
    }
    let t = tau.value();
    Ok((t * (1.0 - t) * theta).ln() - theta * check_loss(residual, tau))
}
