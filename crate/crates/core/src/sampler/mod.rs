//! Gibbs samplers for the four varying-coefficient models.
//!
//! All four share one block kernel. A coefficient block `a` with design rows
//! `z_i` is drawn from the Gaussian conditional
//!
//! ```text
//! P = Σ_i w_i z_i z_iᵀ + prior precision,   μ = P⁻¹ Σ_i w_i z_i (r_i − o_i)
//! ```
//!
//! where `r_i` is the partial residual without the block, `w_i` the
//! observation weight and `o_i` an offset. The quantile models use
//! `w_i = θ/(κ₂² ũ_i)` and `o_i = κ₁ ũ_i`; the Gaussian models use
//! `w_i = 1/σ²` and no offset. Selectable blocks carry an isotropic slab
//! prior `N(0, v I)` with `v = g_j` or `v = σ² ζ_j²`, optionally mixed with a
//! point mass at zero.

pub mod gaussian;
pub mod quantile;
mod samples;

use rand::Rng;

use crate::basis::{expand_design, SplineConfig};
use crate::config::{Method, RunConfig};
use crate::data::{Dataset, Matrix};
use crate::exec::Execution;
use crate::linalg::{dot, Cholesky};
use crate::rng::{sample_mvn_precision, RngHandle};
use crate::{Error, Result};

pub use gaussian::{GaussianSampler, GaussianSamplerState};
pub use quantile::{QuantileSampler, SamplerState};
pub use samples::{ChainSamples, PosteriorSamples};

/// Fixed covariates of a fit: the spline blocks (block 0 is the varying
/// intercept) and the clinical covariates `E`.
#[derive(Debug, Clone)]
pub struct Design {
    pub spline: SplineConfig,
    pub blocks: Vec<Matrix>,
    pub e: Matrix,
}

impl Design {
    pub fn new(dataset: &Dataset, spline: &SplineConfig) -> Result<Self> {
        dataset.validate()?;
        let expanded = expand_design(dataset, spline)?;
        Ok(Self {
            spline: *spline,
            blocks: expanded.blocks,
            e: dataset.e.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.e.rows()
    }

    pub fn d(&self) -> usize {
        self.blocks[0].cols()
    }

    pub fn p(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn q(&self) -> usize {
        self.e.cols()
    }
}

/// Regression coefficients shared by every model.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub d: usize,
    /// `(p + 1) · d` values, block `j` at `j·d .. (j+1)·d`.
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `Q_j` for the `p` selectable blocks.
    pub inclusion: Vec<bool>,
}

impl Coefficients {
    pub fn zeros(p: usize, d: usize, q: usize) -> Self {
        Self {
            d,
            alpha: vec![0.0; (p + 1) * d],
            beta: vec![0.0; q],
            inclusion: vec![false; p],
        }
    }

    pub fn p(&self) -> usize {
        self.inclusion.len()
    }

    pub fn block(&self, j: usize) -> &[f64] {
        &self.alpha[j * self.d..(j + 1) * self.d]
    }

    pub fn block_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.alpha[j * self.d..(j + 1) * self.d]
    }

    pub fn included_count(&self) -> usize {
        self.inclusion.iter().filter(|&&q| q).count()
    }

    /// Checks `Q_j == (α_j ≠ 0)` for every selectable block.
    pub fn check_inclusion(&self) -> Result<()> {
        for (j, &q) in self.inclusion.iter().enumerate() {
            let nonzero = self.block(j + 1).iter().any(|&a| a != 0.0);
            if q != nonzero {
                return Err(Error::Inconsistent(format!(
                    "block {} has inclusion flag {q} but nonzero = {nonzero}",
                    j + 1
                )));
            }
        }
        Ok(())
    }
}

/// Which coefficients to leave out of a residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockId {
    /// `α_j`, with `j = 0` the varying intercept.
    Alpha(usize),
    Beta,
}

/// `Y_i − E_iᵀβ − Σ_{k} α_kᵀ Z_ik − offset`, leaving out `skip` if given.
pub fn residual_without_block(
    coef: &Coefficients,
    design: &Design,
    y: &[f64],
    i: usize,
    skip: Option<BlockId>,
    offset: f64,
) -> f64 {
    let mut r = y[i] - offset;
    if skip != Some(BlockId::Beta) && !coef.beta.is_empty() {
        r -= dot(design.e.row(i), &coef.beta);
    }
    for (k, z) in design.blocks.iter().enumerate() {
        if skip != Some(BlockId::Alpha(k)) {
            r -= dot(z.row(i), coef.block(k));
        }
    }
    r
}

/// Full residual vector `Y − Eβ − Σ Z α` (no offset).
pub(crate) fn full_residuals(coef: &Coefficients, design: &Design, y: &[f64], out: &mut [f64]) {
    out.copy_from_slice(y);
    if !coef.beta.is_empty() {
        for (i, r) in out.iter_mut().enumerate() {
            *r -= dot(design.e.row(i), &coef.beta);
        }
    }
    for (k, z) in design.blocks.iter().enumerate() {
        let a = coef.block(k);
        if a.iter().all(|&v| v == 0.0) {
            continue;
        }
        for (i, r) in out.iter_mut().enumerate() {
            *r -= dot(z.row(i), a);
        }
    }
}

fn spike_from_log_slab_ratio(s: f64, pi0: f64) -> f64 {
    if pi0 <= 0.0 {
        return 0.0;
    }
    if pi0 >= 1.0 {
        return 1.0;
    }
    // l = π0 / (π0 + (1 − π0) eˢ) = 1 / (1 + exp(s + ln((1−π0)/π0)))
    let x = s + (1.0 - pi0).ln() - pi0.ln();
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Posterior probability that a block sits at the point mass, given the
/// slab posterior `N(μ, Σ)`, slab prior variance `v` and prior spike
/// probability `π0`:
///
/// `l = π0 / (π0 + (1 − π0) exp(s))`, `s = −(d/2) log v + ½ log|Σ| + ½ μᵀΣ⁻¹μ`.
pub fn spike_probability(mu: &[f64], sigma: &[f64], slab_variance: f64, pi0: f64) -> Result<f64> {
    let d = mu.len();
    if !(slab_variance > 0.0) {
        return Err(Error::invalid(format!("slab variance must be positive, got {slab_variance}")));
    }
    if !(0.0..=1.0).contains(&pi0) {
        return Err(Error::invalid(format!("pi0 {pi0} outside [0,1]")));
    }
    let chol = Cholesky::new(sigma, d)?;
    let mut x = mu.to_vec();
    chol.solve_in_place(&mut x);
    let quad = dot(mu, &x);
    let s = -0.5 * d as f64 * slab_variance.ln() + 0.5 * chol.log_det() + 0.5 * quad;
    Ok(spike_from_log_slab_ratio(s, pi0))
}

/// Prior on one coefficient block.
#[derive(Debug, Clone, Copy)]
pub enum BlockPrior<'a> {
    /// `N(0, variance · I)`, mixed with a point mass at zero of weight `pi0`
    /// when given.
    Slab { variance: f64, pi0: Option<f64> },
    /// `N(0, P⁻¹)` with the row-major precision `P`.
    Precision(&'a [f64]),
}

/// Conditional posterior of a coefficient block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPosterior {
    pub mean: Vec<f64>,
    pub covariance: Vec<f64>,
    /// Point-mass probability `l_j`, for spike-and-slab priors.
    pub spike_probability: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct BlockWorkspace {
    precision: Vec<f64>,
    mean: Vec<f64>,
    draw: Vec<f64>,
    target: Vec<f64>,
    chol: Cholesky,
}

impl BlockWorkspace {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            precision: Vec::new(),
            mean: Vec::new(),
            draw: Vec::new(),
            target: vec![0.0; n],
            chol: Cholesky::empty(),
        }
    }

    /// Fills the conditional precision, its factor and the mean given the
    /// targets `t_i = r_i − o_i` already in `self.target`. Returns `l_j` for
    /// spike-and-slab priors.
    fn solve(&mut self, z: &Matrix, w: &[f64], prior: BlockPrior<'_>) -> Result<Option<f64>> {
        let k = z.cols();
        self.precision.clear();
        self.precision.resize(k * k, 0.0);
        self.mean.clear();
        self.mean.resize(k, 0.0);
        for (i, (&wi, &ti)) in w.iter().zip(&self.target).enumerate() {
            let row = z.row(i);
            for a in 0..k {
                let wa = wi * row[a];
                if wa == 0.0 {
                    continue;
                }
                self.mean[a] += wa * ti;
                let prow = &mut self.precision[a * k..a * k + a + 1];
                for (p, &zb) in prow.iter_mut().zip(&row[..=a]) {
                    *p += wa * zb;
                }
            }
        }
        match prior {
            BlockPrior::Slab { variance, .. } => {
                for a in 0..k {
                    self.precision[a * k + a] += 1.0 / variance;
                }
            }
            BlockPrior::Precision(p) => {
                for a in 0..k {
                    for b in 0..=a {
                        self.precision[a * k + b] += p[a * k + b];
                    }
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                self.precision[b * k + a] = self.precision[a * k + b];
            }
        }
        self.chol.refactor(&self.precision, k)?;
        // `mean` holds b = Σ w z t; keep μᵀPμ = μᵀb for the spike ratio.
        let rhs = self.mean.clone();
        self.chol.solve_in_place(&mut self.mean);
        match prior {
            BlockPrior::Slab {
                variance,
                pi0: Some(pi0),
            } => {
                let quad = dot(&self.mean, &rhs);
                let s = -0.5 * k as f64 * variance.ln() - 0.5 * self.chol.log_det() + 0.5 * quad;
                Ok(Some(spike_from_log_slab_ratio(s, pi0)))
            }
            _ => Ok(None),
        }
    }
}

/// Conditional posterior of the block with design `z`, given partial
/// residuals `r` (block excluded), weights and offsets.
pub fn block_posterior(
    z: &Matrix,
    partial_residual: &[f64],
    w: &[f64],
    o: &[f64],
    prior: BlockPrior<'_>,
) -> Result<BlockPosterior> {
    let n = z.rows();
    if partial_residual.len() != n || w.len() != n || o.len() != n {
        return Err(Error::DimensionMismatch("block posterior inputs differ in length".into()));
    }
    let mut ws = BlockWorkspace::new(n);
    for (t, (r, o)) in ws.target.iter_mut().zip(partial_residual.iter().zip(o)) {
        *t = r - o;
    }
    let spike = ws.solve(z, w, prior)?;
    Ok(BlockPosterior {
        mean: ws.mean.clone(),
        covariance: ws.chol.inverse(),
        spike_probability: spike,
    })
}

/// Result of one block refresh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOutcome {
    pub included: bool,
    pub spike_probability: Option<f64>,
}

/// Redraws one block in place, keeping `resid` equal to the full residual
/// before and after. The spike uniform is only consumed when `0 < l < 1`.
pub(crate) fn update_block<R: Rng + ?Sized>(
    z: &Matrix,
    coef: &mut [f64],
    resid: &mut [f64],
    w: &[f64],
    o: &[f64],
    prior: BlockPrior<'_>,
    ws: &mut BlockWorkspace,
    rng: &mut R,
) -> Result<BlockOutcome> {
    let was_zero = coef.iter().all(|&a| a == 0.0);
    if !was_zero {
        for (i, r) in resid.iter_mut().enumerate() {
            *r += dot(z.row(i), coef);
        }
    }
    for ((t, r), o) in ws.target.iter_mut().zip(resid.iter()).zip(o) {
        *t = r - o;
    }
    let spike = ws.solve(z, w, prior)?;
    let at_zero = match spike {
        Some(l) if l >= 1.0 => true,
        Some(l) if l > 0.0 => rng.random::<f64>() < l,
        _ => false,
    };
    if at_zero {
        coef.iter_mut().for_each(|a| *a = 0.0);
    } else {
        ws.draw.clear();
        ws.draw.resize(coef.len(), 0.0);
        sample_mvn_precision(rng, &ws.mean, &ws.chol, &mut ws.draw);
        coef.copy_from_slice(&ws.draw);
        for (i, r) in resid.iter_mut().enumerate() {
            *r -= dot(z.row(i), coef);
        }
    }
    Ok(BlockOutcome {
        included: coef.iter().any(|&a| a != 0.0),
        spike_probability: spike,
    })
}

/// One Gibbs sampler, seen by the chain driver.
pub trait GibbsSampler {
    /// One full sweep over all conditionals.
    fn sweep(&mut self, rng: &mut RngHandle) -> Result<()>;
    /// Checks the state invariants.
    fn check_state(&self) -> Result<()>;
    /// Appends the current state to `out`.
    fn record(&self, out: &mut ChainSamples);
}

/// Runs `iterations` sweeps, storing every `thin`-th state after burn-in.
pub fn drive_chain<S: GibbsSampler>(
    sampler: &mut S,
    config: &RunConfig,
    chain: usize,
    design: &Design,
    rng: &mut RngHandle,
) -> Result<ChainSamples> {
    let mcmc = &config.mcmc;
    mcmc.validate()?;
    let mut out = ChainSamples::with_capacity(
        chain,
        rng.seed(),
        rng.stream_id(),
        mcmc.stored_draws(),
        design.p(),
        design.d(),
        design.q(),
        config.method.has_spike(),
    );
    for it in 0..mcmc.iterations {
        sampler.sweep(rng)?;
        if it >= mcmc.burn_in && (it - mcmc.burn_in + 1) % mcmc.thin == 0 {
            sampler.check_state()?;
            sampler.record(&mut out);
        }
    }
    debug_assert_eq!(out.draws, mcmc.stored_draws());
    Ok(out)
}

/// Runs one chain of the configured method on a prepared design.
pub fn run_chain_on_design(
    design: &Design,
    y: &[f64],
    config: &RunConfig,
    chain: usize,
    rng: &mut RngHandle,
) -> Result<ChainSamples> {
    config.validate()?;
    match config.method {
        Method::Bqrvcss | Method::Bqrvc => {
            let mut s = QuantileSampler::new(design, y, config.tau, &config.priors, config.method.has_spike())?;
            drive_chain(&mut s, config, chain, design, rng)
        }
        Method::Bvcss | Method::Bvc => {
            let mut s =
                GaussianSampler::new(design, y, &config.gaussian_priors, config.method.has_spike())?;
            drive_chain(&mut s, config, chain, design, rng)
        }
    }
}

/// One chain of the configured method, seeded by `rng`.
pub fn run_chain(dataset: &Dataset, config: &RunConfig, rng: &mut RngHandle) -> Result<PosteriorSamples> {
    let design = Design::new(dataset, &config.spline)?;
    let chain = run_chain_on_design(&design, &dataset.y, config, 0, rng)?;
    Ok(PosteriorSamples::new(config, &design, vec![chain]))
}

fn run_method(dataset: &Dataset, config: &RunConfig, method: Method, rng: &mut RngHandle) -> Result<PosteriorSamples> {
    let cfg = RunConfig {
        method,
        ..config.clone()
    };
    run_chain(dataset, &cfg, rng)
}

pub fn run_bqrvcss(dataset: &Dataset, config: &RunConfig, rng: &mut RngHandle) -> Result<PosteriorSamples> {
    run_method(dataset, config, Method::Bqrvcss, rng)
}

pub fn run_bqrvc(dataset: &Dataset, config: &RunConfig, rng: &mut RngHandle) -> Result<PosteriorSamples> {
    run_method(dataset, config, Method::Bqrvc, rng)
}

pub fn run_bvcss(dataset: &Dataset, config: &RunConfig, rng: &mut RngHandle) -> Result<PosteriorSamples> {
    run_method(dataset, config, Method::Bvcss, rng)
}

pub fn run_bvc(dataset: &Dataset, config: &RunConfig, rng: &mut RngHandle) -> Result<PosteriorSamples> {
    run_method(dataset, config, Method::Bvc, rng)
}

/// All configured chains. Chain `c` uses stream `c` of `config.mcmc.seed`,
/// so the result does not depend on `config.execution`.
pub fn sample_posterior(dataset: &Dataset, config: &RunConfig) -> Result<PosteriorSamples> {
    sample_posterior_with(dataset, config, config.execution)
}

pub fn sample_posterior_with(dataset: &Dataset, config: &RunConfig, execution: Execution) -> Result<PosteriorSamples> {
    config.validate()?;
    let design = Design::new(dataset, &config.spline)?;
    let chains = execution.try_map(config.mcmc.chains, |c| {
        let mut rng = RngHandle::new(config.mcmc.seed, c as u64);
        run_chain_on_design(&design, &dataset.y, config, c, &mut rng)
    })?;
    Ok(PosteriorSamples::new(config, &design, chains))
}
