//! Gaussian-likelihood samplers: spike-and-slab (`Bvcss`) and group Laplace
//! only (`Bvc`). Slab blocks are `N(0, σ² ζ_j² I)`.

use rand::Rng;

use super::{
    full_residuals, update_block, BlockOutcome, BlockPrior, BlockPosterior, BlockWorkspace, ChainSamples,
    Coefficients, Design, GibbsSampler,
};
use crate::config::GaussianPriorConfig;
use crate::linalg::dot;
use crate::rng::{sample_beta, sample_gamma, sample_inverse_gamma, sample_inverse_gaussian, RngHandle};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSamplerState {
    pub coef: Coefficients,
    pub sigma_sq: f64,
    pub zeta_sq: Vec<f64>,
    pub lambda_sq: f64,
    pub pi0: f64,
}

impl GaussianSamplerState {
    pub fn check(&self) -> Result<()> {
        self.coef.check_inclusion()?;
        let bad = |name: &str, v: f64| Err(Error::Inconsistent(format!("{name} = {v} is not positive")));
        if !(self.sigma_sq > 0.0 && self.sigma_sq.is_finite()) {
            return bad("sigma_sq", self.sigma_sq);
        }
        if !(self.lambda_sq > 0.0 && self.lambda_sq.is_finite()) {
            return bad("lambda_sq", self.lambda_sq);
        }
        if let Some(&z) = self.zeta_sq.iter().find(|z| !(**z > 0.0 && z.is_finite())) {
            return bad("zeta_sq", z);
        }
        if !(0.0..=1.0).contains(&self.pi0) {
            return Err(Error::Inconsistent(format!("pi0 = {} outside [0,1]", self.pi0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GaussianSampler<'a> {
    design: &'a Design,
    y: Vec<f64>,
    priors: GaussianPriorConfig,
    spike: bool,
    fix_pi0: bool,
    precision_beta: Vec<f64>,
    precision_alpha0: Vec<f64>,
    pub state: GaussianSamplerState,
    resid: Vec<f64>,
    w: Vec<f64>,
    o: Vec<f64>,
    ws: BlockWorkspace,
}

impl<'a> GaussianSampler<'a> {
    /// Starts from all selectable blocks at zero, `σ² = ζ_j² = λ² = 1`,
    /// `π0 = 0.5`, `β = 0`, and `α_0` at its conditional mean.
    pub fn new(design: &'a Design, y: &[f64], priors: &GaussianPriorConfig, spike: bool) -> Result<Self> {
        priors.validate()?;
        let (n, p, d, q) = (design.n(), design.p(), design.d(), design.q());
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!("{} responses for {n} rows", y.len())));
        }
        let state = GaussianSamplerState {
            coef: Coefficients::zeros(p, d, q),
            sigma_sq: 1.0,
            zeta_sq: vec![1.0; p],
            lambda_sq: 1.0,
            pi0: if spike { 0.5 } else { 0.0 },
        };
        let mut s = Self {
            design,
            y: y.to_vec(),
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

    pub fn set_state(&mut self, state: GaussianSamplerState) -> Result<()> {
        let (p, d, q) = (self.design.p(), self.design.d(), self.design.q());
        if state.zeta_sq.len() != p
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

    pub fn residuals(&self) -> &[f64] {
        &self.resid
    }

    pub fn refresh(&mut self) {
        full_residuals(&self.state.coef, self.design, &self.y, &mut self.resid);
        self.refresh_weights();
    }

    fn refresh_weights(&mut self) {
        let w = 1.0 / self.state.sigma_sq;
        self.w.iter_mut().for_each(|x| *x = w);
    }

    fn slab_prior(&self, j: usize) -> BlockPrior<'static> {
        BlockPrior::Slab {
            variance: self.state.sigma_sq * self.state.zeta_sq[j - 1],
            pi0: self.spike.then_some(self.state.pi0),
        }
    }

    fn check_block_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.design.p() {
            return Err(Error::invalid(format!("block index {j} outside 1..={}", self.design.p())));
        }
        Ok(())
    }

    fn partial_residual(&self, j: usize) -> Vec<f64> {
        let z = &self.design.blocks[j];
        let a = self.state.coef.block(j);
        self.resid.iter().enumerate().map(|(i, r)| r + dot(z.row(i), a)).collect()
    }

    /// Conditional of `α_j`: mean `Σ_j Z_jᵀ r`, covariance `σ² Σ_j` with
    /// `Σ_j = (Z_jᵀZ_j + ζ_j⁻² I)⁻¹`.
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

    pub fn update_alpha_block<R: Rng + ?Sized>(&mut self, j: usize, rng: &mut R) -> Result<BlockOutcome> {
        self.check_block_index(j)?;
        let prior = self.slab_prior(j);
        let d = self.design.d();
        let out = update_block(
            &self.design.blocks[j],
            &mut self.state.coef.alpha[j * d..(j + 1) * d],
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

    /// `(shape, scale)` of the inverse-gamma `σ²` conditional.
    pub fn sigma_sq_parameters(&self) -> (f64, f64) {
        let n = self.resid.len() as f64;
        let d = self.design.d() as f64;
        let k = self.state.coef.included_count() as f64;
        let mut penalty = 0.0;
        for j in 1..=self.design.p() {
            if self.state.coef.inclusion[j - 1] {
                let a = self.state.coef.block(j);
                penalty += dot(a, a) / self.state.zeta_sq[j - 1];
            }
        }
        let rss = dot(&self.resid, &self.resid);
        (n / 2.0 + d / 2.0 * k + self.priors.s, 0.5 * rss + 0.5 * penalty + self.priors.h)
    }

    pub fn update_sigma_sq<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (shape, scale) = self.sigma_sq_parameters();
        self.state.sigma_sq = sample_inverse_gamma(rng, shape, scale)?;
        self.refresh_weights();
        Ok(())
    }

    pub fn update_zeta_sq<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let d = self.design.d() as f64;
        let (sigma_sq, lambda_sq) = (self.state.sigma_sq, self.state.lambda_sq);
        for j in 1..=self.design.p() {
            let a = self.state.coef.block(j);
            let norm_sq = dot(a, a);
            let z = if self.state.coef.inclusion[j - 1] {
                if norm_sq == 0.0 {
                    return Err(Error::Inconsistent(format!("block {j} flagged as included but is zero")));
                }
                1.0 / sample_inverse_gaussian(rng, (sigma_sq * lambda_sq / norm_sq).sqrt(), lambda_sq)?
            } else {
                sample_gamma(rng, (d + 1.0) / 2.0, lambda_sq / 2.0)?
            };
            self.state.zeta_sq[j - 1] = z;
        }
        Ok(())
    }

    /// `(shape, rate)` of the `λ²` conditional.
    pub fn lambda_sq_parameters(&self) -> (f64, f64) {
        let (p, d) = (self.design.p() as f64, self.design.d() as f64);
        (
            (d + 1.0) * p / 2.0 + self.priors.t,
            0.5 * self.state.zeta_sq.iter().sum::<f64>() + self.priors.psi,
        )
    }

    pub fn update_lambda_sq<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (shape, rate) = self.lambda_sq_parameters();
        self.state.lambda_sq = sample_gamma(rng, shape, rate)?;
        Ok(())
    }

    /// `(p + a − ΣQ, b + ΣQ)`.
    pub fn pi0_parameters(&self) -> (f64, f64) {
        let included = self.state.coef.included_count() as f64;
        let p = self.design.p() as f64;
        (p + self.priors.a - included, self.priors.b + included)
    }

    pub fn update_pi0<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if !self.spike || self.fix_pi0 {
            return Ok(());
        }
        let (a, b) = self.pi0_parameters();
        self.state.pi0 = sample_beta(rng, a, b)?;
        Ok(())
    }

    /// One sweep in the order α_1..α_p, α_0, β, σ², ζ², λ², π0.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        self.refresh();
        for j in 1..=self.design.p() {
            self.update_alpha_block(j, rng)?;
        }
        self.update_alpha0(rng)?;
        self.update_beta(rng)?;
        self.update_sigma_sq(rng)?;
        self.update_zeta_sq(rng)?;
        self.update_lambda_sq(rng)?;
        self.update_pi0(rng)?;
        Ok(())
    }
}

impl GibbsSampler for GaussianSampler<'_> {
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
        out.scale.push(s.sigma_sq);
        out.shrinkage.push(s.lambda_sq);
        out.slab.extend_from_slice(&s.zeta_sq);
        if self.spike {
            out.pi0.push(s.pi0);
        }
        out.inclusion.extend(s.coef.inclusion.iter().map(|&q| q as u8));
        out.draws += 1;
    }
}
