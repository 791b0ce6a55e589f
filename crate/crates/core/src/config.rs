//! Run configuration shared by the library entry points and the CLI.
//!
//! Every field has a default matching the simulation settings the samplers
//! were designed around: quadratic splines with two interior knots, 10,000
//! iterations of which 5,000 are burn-in, and diffuse conjugate priors.

use serde::{Deserialize, Serialize};

use crate::ald::QuantileLevel;
use crate::basis::{SplineConfig, DEFAULT_GRID_POINTS};
use crate::exec::Execution;
use crate::linalg::{self, Cholesky};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Quantile likelihood, spike-and-slab group prior.
    Bqrvcss,
    /// Quantile likelihood, multivariate Laplace group prior.
    Bqrvc,
    /// Gaussian likelihood, spike-and-slab group prior.
    Bvcss,
    /// Gaussian likelihood, multivariate Laplace group prior.
    Bvc,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Bqrvcss, Method::Bqrvc, Method::Bvcss, Method::Bvc];

    pub fn is_quantile(self) -> bool {
        matches!(self, Method::Bqrvcss | Method::Bqrvc)
    }

    pub fn has_spike(self) -> bool {
        matches!(self, Method::Bqrvcss | Method::Bvcss)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Bqrvcss => "bqrvcss",
            Method::Bqrvc => "bqrvc",
            Method::Bvcss => "bvcss",
            Method::Bvc => "bvc",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown method '{s}'")))
    }
}

/// Prior covariance for the unpenalized coefficient vectors (`β`, `α₀`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorCovariance {
    /// `scale · I`.
    Isotropic(f64),
    /// Full row-major matrix.
    Dense(Vec<f64>),
}

impl Default for PriorCovariance {
    fn default() -> Self {
        PriorCovariance::Isotropic(100.0)
    }
}

impl PriorCovariance {
    /// Row-major `k × k` precision matrix.
    pub fn precision(&self, k: usize) -> Result<Vec<f64>> {
        match self {
            PriorCovariance::Isotropic(s) => {
                if !(*s > 0.0) || !s.is_finite() {
                    return Err(Error::invalid(format!("prior variance must be positive, got {s}")));
                }
                Ok(linalg::identity(k, 1.0 / s))
            }
            PriorCovariance::Dense(m) => {
                if m.len() != k * k {
                    return Err(Error::DimensionMismatch(format!(
                        "prior covariance has {} entries, expected {k}x{k}",
                        m.len()
                    )));
                }
                if !linalg::is_symmetric(m, k) {
                    return Err(Error::invalid("prior covariance is not symmetric"));
                }
                Ok(Cholesky::new(m, k)?.inverse())
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("hyperparameter {name} must be positive, got {v}")))
    }
}

/// Hyperparameters of the quantile samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PriorConfig {
    /// `θ ~ Gamma(a, b)`
    pub a: f64,
    pub b: f64,
    /// `η² ~ Gamma(c, m)`
    pub c: f64,
    pub m: f64,
    /// `π₀ ~ Beta(e, f)`, `π₀` being the prior spike probability.
    pub e: f64,
    pub f: f64,
    pub sigma_beta: PriorCovariance,
    pub sigma_alpha0: PriorCovariance,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            b: 1.0,
            c: 1.0,
            m: 1.0,
            e: 1.0,
            f: 1.0,
            sigma_beta: PriorCovariance::default(),
            sigma_alpha0: PriorCovariance::default(),
        }
    }
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("a", self.a), ("b", self.b), ("c", self.c), ("m", self.m), ("e", self.e), ("f", self.f)] {
            positive(n, v)?;
        }
        Ok(())
    }
}

/// Hyperparameters of the Gaussian samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianPriorConfig {
    /// `σ² ~ Inverse-Gamma(s, h)`
    pub s: f64,
    pub h: f64,
    /// `λ² ~ Gamma(t, ψ)`
    pub t: f64,
    pub psi: f64,
    /// `π₀ ~ Beta(a, b)`
    pub a: f64,
    pub b: f64,
    pub sigma_beta: PriorCovariance,
    pub sigma_alpha0: PriorCovariance,
}

impl Default for GaussianPriorConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            h: 1.0,
            t: 1.0,
            psi: 1.0,
            a: 1.0,
            b: 1.0,
            sigma_beta: PriorCovariance::default(),
            sigma_alpha0: PriorCovariance::default(),
        }
    }
}

impl GaussianPriorConfig {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("s", self.s), ("h", self.h), ("t", self.t), ("psi", self.psi), ("a", self.a), ("b", self.b)] {
            positive(n, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McmcConfig {
    /// Total sweeps including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            burn_in: 5_000,
            thin: 1,
            chains: 1,
            seed: 1,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::invalid("thin must be at least 1"));
        }
        if self.chains == 0 {
            return Err(Error::invalid("at least one chain is required"));
        }
        if self.iterations <= self.burn_in || self.stored_draws() == 0 {
            return Err(Error::invalid(format!(
                "no draws retained: iterations {} with burn-in {} and thin {}",
                self.iterations, self.burn_in, self.thin
            )));
        }
        Ok(())
    }

    /// `(iterations − burn_in) / thin`
    pub fn stored_draws(&self) -> usize {
        self.iterations.saturating_sub(self.burn_in) / self.thin.max(1)
    }
}

/// Complete description of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub method: Method,
    pub tau: QuantileLevel,
    pub spline: SplineConfig,
    pub priors: PriorConfig,
    pub gaussian_priors: GaussianPriorConfig,
    pub mcmc: McmcConfig,
    /// Curve evaluation grid size.
    pub grid_points: usize,
    /// Median-probability-model inclusion threshold.
    pub inclusion_threshold: f64,
    /// Credible level for bands and CI-based selection.
    pub credible_level: f64,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: Method::Bqrvcss,
            tau: QuantileLevel::median(),
            spline: SplineConfig::default(),
            priors: PriorConfig::default(),
            gaussian_priors: GaussianPriorConfig::default(),
            mcmc: McmcConfig::default(),
            grid_points: DEFAULT_GRID_POINTS,
            inclusion_threshold: 0.5,
            credible_level: 0.95,
            execution: Execution::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.mcmc.validate()?;
        if self.method.is_quantile() {
            self.priors.validate()?;
        } else {
            self.gaussian_priors.validate()?;
        }
        if self.spline.basis_count() == 0 {
            return Err(Error::invalid("spline basis is empty"));
        }
        if self.grid_points < 2 {
            return Err(Error::invalid("curve grid needs at least two points"));
        }
        if !(0.0..=1.0).contains(&self.inclusion_threshold) {
            return Err(Error::invalid("inclusion threshold must lie in [0,1]"));
        }
        if !(self.credible_level > 0.0 && self.credible_level < 1.0) {
            return Err(Error::invalid("credible level must lie in (0,1)"));
        }
        Ok(())
    }
}
