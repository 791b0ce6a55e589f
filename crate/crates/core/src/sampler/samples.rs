use serde::{Deserialize, Serialize};

use super::Design;
use crate::basis::SplineConfig;
use crate::config::{Method, RunConfig};
use crate::{Error, Result};

/// Stored draws of one chain, column blocks laid out draw-major.
///
/// `scale` is `θ` for the quantile models and `σ²` for the Gaussian ones,
/// `shrinkage` is `η²` or `λ²`, and `slab` holds `g_j` or `ζ_j²`. The latent
/// `ũ` are not kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSamples {
    pub chain: usize,
    pub seed: u64,
    pub stream_id: u64,
    pub draws: usize,
    /// `draws × (p + 1) · d`
    pub alpha: Vec<f64>,
    /// `draws × q`
    pub beta: Vec<f64>,
    pub scale: Vec<f64>,
    pub shrinkage: Vec<f64>,
    /// `draws × p`
    pub slab: Vec<f64>,
    /// Empty for models without a point mass.
    pub pi0: Vec<f64>,
    /// `draws × p`, 1 when the block is nonzero.
    pub inclusion: Vec<u8>,
}

impl ChainSamples {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn with_capacity(
        chain: usize,
        seed: u64,
        stream_id: u64,
        draws: usize,
        p: usize,
        d: usize,
        q: usize,
        spike: bool,
    ) -> Self {
        Self {
            chain,
            seed,
            stream_id,
            draws: 0,
            alpha: Vec::with_capacity(draws * (p + 1) * d),
            beta: Vec::with_capacity(draws * q),
            scale: Vec::with_capacity(draws),
            shrinkage: Vec::with_capacity(draws),
            slab: Vec::with_capacity(draws * p),
            pi0: Vec::with_capacity(if spike { draws } else { 0 }),
            inclusion: Vec::with_capacity(draws * p),
        }
    }
}

/// Posterior draws of a fit together with the layout needed to read them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSamples {
    pub method: Method,
    pub tau: f64,
    pub spline: SplineConfig,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: Vec<ChainSamples>,
}

impl PosteriorSamples {
    pub fn new(config: &RunConfig, design: &Design, chains: Vec<ChainSamples>) -> Self {
        Self {
            method: config.method,
            tau: config.tau.value(),
            spline: design.spline,
            n: design.n(),
            p: design.p(),
            d: design.d(),
            q: design.q(),
            iterations: config.mcmc.iterations,
            burn_in: config.mcmc.burn_in,
            thin: config.mcmc.thin,
            seed: config.mcmc.seed,
            chains,
        }
    }

    /// Draws per chain.
    pub fn draws(&self) -> usize {
        self.chains.first().map_or(0, |c| c.draws)
    }

    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(|c| c.draws).sum()
    }

    pub fn alpha_width(&self) -> usize {
        (self.p + 1) * self.d
    }

    /// `α_j` of draw `s` in chain `c`.
    pub fn alpha_block(&self, c: usize, s: usize, j: usize) -> &[f64] {
        let w = self.alpha_width();
        let start = s * w + j * self.d;
        &self.chains[c].alpha[start..start + self.d]
    }

    pub fn beta_draw(&self, c: usize, s: usize) -> &[f64] {
        &self.chains[c].beta[s * self.q..(s + 1) * self.q]
    }

    /// `Q_j` of draw `s` in chain `c`, for `j` in `1..=p`.
    pub fn included(&self, c: usize, s: usize, j: usize) -> bool {
        self.chains[c].inclusion[s * self.p + j - 1] != 0
    }

    /// Checks array lengths against the declared layout.
    pub fn validate(&self) -> Result<()> {
        let expected = self.iterations.saturating_sub(self.burn_in) / self.thin.max(1);
        let spike = self.method.has_spike();
        for ch in &self.chains {
            let s = ch.draws;
            let ok = s == expected
                && ch.alpha.len() == s * self.alpha_width()
                && ch.beta.len() == s * self.q
                && ch.scale.len() == s
                && ch.shrinkage.len() == s
                && ch.slab.len() == s * self.p
                && ch.pi0.len() == if spike { s } else { 0 }
                && ch.inclusion.len() == s * self.p;
            if !ok {
                return Err(Error::Inconsistent(format!(
                    "chain {} arrays do not match {} draws of p = {}, d = {}, q = {}",
                    ch.chain, expected, self.p, self.d, self.q
                )));
            }
        }
        Ok(())
    }
}
