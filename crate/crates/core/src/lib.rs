//! Bayesian regularized quantile varying-coefficient regression.
//!
//! The crate implements four Gibbs samplers for varying-coefficient models
//! whose coefficient functions are expanded in normalized B-spline bases:
//!
//! * `Bqrvcss`: asymmetric-Laplace working likelihood with multivariate
//!   spike-and-slab (point mass plus multivariate Laplace) group priors,
//! * `Bqrvc`: the same likelihood with multivariate Laplace priors only,
//! * `Bvcss` / `Bvc`: Gaussian-likelihood counterparts of the two above.
//!
//! Around the samplers sit the pieces needed to run a full simulation study:
//! scenario generators, posterior summaries (median probability model,
//! credible-interval selection, pointwise curve bands), selection and
//! estimation metrics, Gelman–Rubin diagnostics, and file persistence.
//!
//! Multi-chain fits and replicate batches run through [`exec::Execution`],
//! which uses rayon when the `parallel` feature is enabled and falls back to
//! plain iteration otherwise.

pub mod ald;
pub mod basis;
pub mod config;
pub mod data;
pub mod diagnostics;
mod error;
pub mod exec;
pub mod inference;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod sampler;
pub mod simulate;
pub mod study;

pub use error::{Error, Result};
