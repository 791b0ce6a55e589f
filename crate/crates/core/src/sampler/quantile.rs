//! Quantile samplers (spike-and-slab and Laplace-only variants) built on the
//! exponential–normal mixture form of the asymmetric Laplace likelihood:
//! `Y_i = fitted_i + κ₁ũ_i + κ₂ √(ũ_i/θ) W_i`, `ũ_i ~ Exp(θ)`.

use rand::Rng;

use super::{
    full_residuals, update_block, BlockOutcome, BlockPrior, BlockPosterior, BlockWorkspace, ChainSamples,
    Coefficients, Design, GibbsSampler,
};
use crate::ald::{ald_constants, AldConstants, QuantileLevel};
use crate::config::PriorConfig;
use crate::linalg::dot;
use crate::rng::{sample_beta, sample_gamma, sample_inverse_gaussian, RngHandle};
use crate::{Error, Result};

/// Smallest residual magnitude used in the `ũ_i` refresh.
pub const RESIDUAL_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    pub coef: Coefficients,
    pub u_tilde: Vec<f64>,
    pub g: Vec<f64>,
    pub theta: f64,
    pub eta_sq: f64,
    pub pi0: f64,
}

impl SamplerState {
    pub fn check(&self) -> Result<()> {
        self.coef.check_inclusion()?;
        let bad = |name: &str, v: f64| Err(Error::Inconsistent(format!("{name} = {v} is not positive")));
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad("theta", self.theta);
        }
        if !(self.eta_sq > 0.0 && self.eta_sq.is_finite()) {
            return bad("eta_sq", self.eta_sq);
        }
        if let Some(&u) = self.u_tilde.iter().find(|u| !(**u > 0.0 && u.is_finite())) {
            return bad("u_tilde", u);
        }
        if let Some(&g) = self.g.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return bad("g", g);
        }
        if !(0.0..=1.0).contains(&self.pi0) {
            return Err(Error::Inconsistent(format!("pi0 = {} outside [0,1]", self.pi0)));
        }
        Ok(())
    }
}

/// Gibbs sampler for the quantile models. With `spike = false` the point
/// mass and `π0` are dropped.
#[derive(Debug, Clone)]
pub struct QuantileSampler<'a> {
    design: &'a Design,
    y: Vec<f64>,
    tau: QuantileLevel,
    consts: AldConstants,
    priors: PriorConfig,
    spike: bool,
    fix_pi0: bool,
    precision_beta: Vec<f64>,
    precision_alpha0: Vec<f64>,
    pub state: SamplerState,
    resid: Vec<f64>,
    w: Vec<f64>,
    o: Vec<f64>,
    ws: BlockWorkspace,
}

impl<'a> QuantileSampler<'a> {
    /// Starts from all selectable blocks at zero, `θ = ũ_i = g_j = η² = 1`,
    /// `π0 = 0.5`, `β = 0`, and `α_0` at its conditional mean.
    pub fn new(design: &'a Design, y: &[f64], tau: QuantileLevel, priors: &PriorConfig, spike: bool) -> Result<Self> {
        priors.validate()?;
        let (n, p, d, q) = (design.n(), design.p(), design.d(), design.q());
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!("{} responses for {n} rows", y.len())));
        }
        let state = SamplerState {
            coef: Coefficients::zeros(p, d, q),
            u_tilde: vec![1.0; n],
            g: vec![1.0; p],
            theta: 1.0,
            eta_sq: 1.0,
            pi0: if spike { 0.5 } else { 0.0 },
        };
        let mut s = Self {
            design,
            y: y.to_vec(),
            tau,
            consts: ald_constants(tau),
            priors: priors.clone(),
            spike,
            fix_pi0: false,
            precision_beta: priors.sigma_beta.precision(q)?,
            precision_alpha0: priors.sigma_alpha0.precision(d)?,
            state,
            resid: vec![0.0; n],
            w: vec![0.0; n],
            o: vec![0.0; n],
            ws: BlockWorkspace::new(n),
        };
        s.refresh();
        let post = s.alpha0_posterior()?;
        s.state.coef.block_mut(0).copy_from_slice(&post.mean);
        s.refresh();
        Ok(s)
    }

    /// Replaces the state (checked) and resynchronizes derived quantities.
    pub fn set_state(&mut self, state: SamplerState) -> Result<()> {
        let (n, p, d, q) = (self.design.n(), self.design.p(), self.design.d(), self.design.q());
        if state.u_tilde.len() != n
            || state.g.len() != p
            || state.coef.alpha.len() != (p + 1) * d
            || state.coef.beta.len() != q
            || state.coef.inclusion.len() != p
        {
            return Err(Error::DimensionMismatch("sampler state does not fit the design".into()));
        }
        state.check()?;
        self.state = state;
        self.refresh();
        Ok(())
    }

    /// Replaces the response vector.
    pub fn set_response(&mut self, y: &[f64]) -> Result<()> {
        if y.len() != self.y.len() {
            return Err(Error::DimensionMismatch("response length changed".into()));
        }
        self.y.copy_from_slice(y);
        self.refresh();
        Ok(())
    }

    /// Holds `π0` at its current value instead of sampling it.
    pub fn fix_pi0(&mut self, fixed: bool) {
        self.fix_pi0 = fixed;
    }

    pub fn constants(&self) -> AldConstants {
        self.consts
    }

    pub fn tau(&self) -> QuantileLevel {
        self.tau
    }

    pub fn residuals(&self) -> &[f64] {
        &self.resid
    }

    /// Recomputes residuals, weights and offsets from the state.
    pub fn refresh(&mut self) {
        full_residuals(&self.state.coef, self.design, &self.y, &mut self.resid);
        self.refresh_weights();
    }

    fn refresh_weights(&mut self) {
        let c = self.state.theta / self.consts.kappa2_sq;
        for ((w, o), &u) in self.w.iter_mut().zip(self.o.iter_mut()).zip(&self.state.u_tilde) {
            *w = c / u;
            *o = self.consts.kappa1 * u;
        }
    }

    /// Inverse-Gaussian parameters `(mean, shape)` of `1/ũ_i` given the full
    /// residual `r`.
    pub fn latent_u_parameters(&self, r: f64) -> (f64, f64) {
        let AldConstants { kappa1, kappa2_sq } = self.consts;
        let r = r.abs().max(RESIDUAL_FLOOR);
        let mean = (kappa1 * kappa1 + 2.0 * kappa2_sq).sqrt() / r;
        let shape = self.state.theta * kappa1 * kappa1 / kappa2_sq + 2.0 * self.state.theta;
        (mean, shape)
    }

    pub fn update_latent_u<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        for i in 0..self.resid.len() {
            let (mean, shape) = self.latent_u_parameters(self.resid[i]);
            self.state.u_tilde[i] = 1.0 / sample_inverse_gaussian(rng, mean, shape)?;
        }
        self.refresh_weights();
        Ok(())
    }

    fn slab_prior(&self, j: usize) -> BlockPrior<'static> {
        BlockPrior::Slab {
            variance: self.state.g[j - 1],
            pi0: self.spike.then_some(self.state.pi0),
        }
    }

    fn partial_residual(&self, j: usize) -> Vec<f64> {
        let z = &self.design.blocks[j];
        let a = self.state.coef.block(j);
        self.resid.iter().enumerate().map(|(i, r)| r + dot(z.row(i), a)).collect()
    }

    /// Conditional posterior of `α_j` (`1 ≤ j ≤ p`) at the current state.
    pub fn alpha_block_posterior(&self, j: usize) -> Result<BlockPosterior> {
        self.check_block_index(j)?;
        super::block_posterior(
            &self.design.blocks[j],
            &self.partial_residual(j),
            &self.w,
            &self.o,
            self.slab_prior(j),
        )
    }

    pub fn alpha0_posterior(&self) -> Result<BlockPosterior> {
        super::block_posterior(
            &self.design.blocks[0],
            &self.partial_residual(0),
            &self.w,
            &self.o,
            BlockPrior::Precision(&self.precision_alpha0),
        )
    }

    pub fn beta_posterior(&self) -> Result<BlockPosterior> {
        let e = &self.design.e;
        let partial: Vec<f64> = self
            .resid
            .iter()
            .enumerate()
            .map(|(i, r)| r + dot(e.row(i), &self.state.coef.beta))
            .collect();
        super::block_posterior(e, &partial, &self.w, &self.o, BlockPrior::Precision(&self.precision_beta))
    }

    fn check_block_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.design.p() {
            return Err(Error::invalid(format!("block index {j} outside 1..={}", self.design.p())));
        }
        Ok(())
    }

    pub fn update_alpha_block<R: Rng + ?Sized>(&mut self, j: usize, rng: &mut R) -> Result<BlockOutcome> {
        self.check_block_index(j)?;
        let prior = self.slab_prior(j);
        let d = self.design.d();
        let block = &mut self.state.coef.alpha[j * d..(j + 1) * d];
        let out = update_block(
            &self.design.blocks[j],
            block,
            &mut self.resid,
            &self.w,
            &self.o,
            prior,
            &mut self.ws,
            rng,
        )?;
        if !self.spike && !out.included {
            return Err(Error::Inconsistent(format!("block {j} drawn exactly zero without a point mass")));
        }
        self.state.coef.inclusion[j - 1] = out.included;
        Ok(out)
    }

    pub fn update_alpha0<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let d = self.design.d();
        update_block(
            &self.design.blocks[0],
            &mut self.state.coef.alpha[..d],
            &mut self.resid,
            &self.w,
            &self.o,
            BlockPrior::Precision(&self.precision_alpha0),
            &mut self.ws,
            rng,
        )?;
        Ok(())
    }

    /// Skipped when there are no clinical covariates.
    pub fn update_beta<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.design.q() == 0 {
            return Ok(());
        }
        update_block(
            &self.design.e,
            &mut self.state.coef.beta,
            &mut self.resid,
            &self.w,
            &self.o,
            BlockPrior::Precision(&self.precision_beta),
            &mut self.ws,
            rng,
        )?;
        Ok(())
    }

    /// `(shape, rate)` of the `θ` conditional.
    pub fn theta_parameters(&self) -> (f64, f64) {
        let n = self.resid.len() as f64;
        let k2 = self.consts.kappa2_sq;
        let mut quad = 0.0;
        let mut usum = 0.0;
        for ((r, o), u) in self.resid.iter().zip(&self.o).zip(&self.state.u_tilde) {
            let e = r - o;
            quad += e * e / (k2 * u);
            usum += u;
        }
        (1.5 * n + self.priors.a, 0.5 * quad + usum + self.priors.b)
    }

    pub fn update_theta<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (shape, rate) = self.theta_parameters();
        self.state.theta = sample_gamma(rng, shape, rate)?;
        self.refresh_weights();
        Ok(())
    }

    /// `(shape, rate)` of the `η²` conditional.
    pub fn eta_sq_parameters(&self) -> (f64, f64) {
        let (p, d) = (self.design.p() as f64, self.design.d() as f64);
        (
            (d + 1.0) * p / 2.0 + self.priors.c,
            0.5 * self.state.g.iter().sum::<f64>() + self.priors.m,
        )
    }

    pub fn update_eta_sq<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (shape, rate) = self.eta_sq_parameters();
        self.state.eta_sq = sample_gamma(rng, shape, rate)?;
        Ok(())
    }

    pub fn update_g<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let d = self.design.d();
        let eta_sq = self.state.eta_sq;
        for j in 1..=self.design.p() {
            let a = self.state.coef.block(j);
            let norm_sq = dot(a, a);
            let g = if self.state.coef.inclusion[j - 1] {
                if norm_sq == 0.0 {
                    return Err(Error::Inconsistent(format!("block {j} flagged as included but is zero")));
                }
                1.0 / sample_inverse_gaussian(rng, (eta_sq / norm_sq).sqrt(), eta_sq)?
            } else {
                sample_gamma(rng, (d as f64 + 1.0) / 2.0, eta_sq / 2.0)?
            };
            self.state.g[j - 1] = g;
        }
        Ok(())
    }

    /// Beta parameters of the `π0` conditional:
    /// `(e + #zero blocks, f + #nonzero blocks)`.
    pub fn pi0_parameters(&self) -> (f64, f64) {
        let included = self.state.coef.included_count() as f64;
        let p = self.design.p() as f64;
        (self.priors.e + p - included, self.priors.f + included)
    }

    pub fn update_pi0<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if !self.spike || self.fix_pi0 {
            return Ok(());
        }
        let (a, b) = self.pi0_parameters();
        self.state.pi0 = sample_beta(rng, a, b)?;
        Ok(())
    }

    /// One sweep in the order ũ, α_1..α_p, α_0, β, θ, η², g, π0.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.refresh();
        self.update_latent_u(rng)?;
        for j in 1..=self.design.p() {
            self.update_alpha_block(j, rng)?;
        }
        self.update_alpha0(rng)?;
        self.update_beta(rng)?;
        self.update_theta(rng)?;
        self.update_eta_sq(rng)?;
        self.update_g(rng)?;
        self.update_pi0(rng)?;
        Ok(())
    }
}

impl GibbsSampler for QuantileSampler<'_> {
    fn sweep(&mut self, rng: &mut RngHandle) -> Result<()> {
        self.step(rng)
    }

    fn check_state(&self) -> Result<()> {
        self.state.check()
    }

    fn record(&self, out: &mut ChainSamples) {
        let s = &self.state;
        out.alpha.extend_from_slice(&s.coef.alpha);
        out.beta.extend_from_slice(&s.coef.beta);
        out.scale.push(s.theta);
        out.shrinkage.push(s.eta_sq);
        out.slab.extend_from_slice(&s.g);
        if self.spike {
            out.pi0.push(s.pi0);
        }
        out.inclusion.extend(s.coef.inclusion.iter().map(|&q| q as u8));
        out.draws += 1;
    }
}
