//! Gelman–Rubin potential scale reduction factor.

use serde::{Deserialize, Serialize};

use crate::inference::select;
use crate::sampler::PosteriorSamples;
use crate::{Error, Result};

/// Conventional convergence cutoff.
pub const PSRF_CUTOFF: f64 = 1.1;

/// Default trace spacing in stored draws.
pub const CHECKPOINT_STEP: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Psrf {
    pub value: f64,
    /// Within-chain variance was zero, so the ratio is undefined.
    pub degenerate: bool,
    /// Degenerate with distinct chain means.
    pub divergent: bool,
}

impl Psrf {
    pub fn converged(&self, cutoff: f64) -> bool {
        !self.divergent && self.value <= cutoff
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// PSRF of `m ≥ 2` equal-length chains of one scalar parameter.
///
/// `B = n · Var(chain means)`, `W` the mean within-chain variance,
/// `var⁺ = (n−1)/n · W + B/n`, `PSRF = √(var⁺ / W)`.
pub fn psrf(chains: &[&[f64]]) -> Result<Psrf> {
    if chains.len() < 2 {
        return Err(Error::invalid("PSRF needs at least two chains"));
    }
    let n = chains[0].len();
    if n < 2 {
        return Err(Error::invalid("PSRF needs chains of length at least two"));
    }
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch("chains differ in length".into()));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().zip(&means).map(|(c, &m)| sample_var(c, m)).sum::<f64>() / chains.len() as f64;
    let grand = mean(&means);
    let nf = n as f64;
    let b = nf * sample_var(&means, grand);
    if w == 0.0 {
        return Ok(Psrf {
            value: 1.0,
            degenerate: true,
            divergent: b > 0.0,
        });
    }
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Ok(Psrf {
        value: (var_plus / w).sqrt(),
        degenerate: false,
        divergent: false,
    })
}

/// PSRF on prefixes of length `k` for each checkpoint `k`.
pub fn psrf_trace(chains: &[&[f64]], checkpoints: &[usize]) -> Result<Vec<(usize, Psrf)>> {
    checkpoints
        .iter()
        .map(|&k| {
            let prefixes: Vec<&[f64]> = chains
                .iter()
                .map(|c| c.get(..k).ok_or_else(|| Error::invalid(format!("checkpoint {k} beyond chain length"))))
                .collect::<Result<_>>()?;
            Ok((k, psrf(&prefixes)?))
        })
        .collect()
}

/// Halves one chain, dropping the middle draw when the length is odd.
pub fn split_chain(chain: &[f64]) -> [&[f64]; 2] {
    let h = chain.len() / 2;
    [&chain[..h], &chain[chain.len() - h..]]
}

/// `step, 2·step, …` up to `len`, always ending at `len`.
pub fn default_checkpoints(len: usize, step: usize) -> Vec<usize> {
    let step = step.max(1);
    let mut out: Vec<usize> = (1..).map(|k| k * step).take_while(|&k| k < len).filter(|&k| k >= 2).collect();
    if len >= 2 {
        out.push(len);
    }
    out
}

/// One scalar parameter tracked across chains.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedParameter {
    pub name: String,
    pub chains: Vec<Vec<f64>>,
}

/// The varying intercept's coefficients, those of the selected blocks, and
/// the likelihood scale (`theta` or `sigma_sq`).
pub fn tracked_parameters(samples: &PosteriorSamples, selected: &[usize]) -> Vec<TrackedParameter> {
    let d = samples.d;
    let width = samples.alpha_width();
    let mut out = Vec::new();
    for &j in std::iter::once(&0).chain(selected) {
        for s in 0..d {
            let col = j * d + s;
            out.push(TrackedParameter {
                name: format!("alpha_{j}_{}", s + 1),
                chains: samples
                    .chains
                    .iter()
                    .map(|ch| ch.alpha.chunks_exact(width).map(|r| r[col]).collect())
                    .collect(),
            });
        }
    }
    out.push(TrackedParameter {
        name: if samples.method.is_quantile() { "theta" } else { "sigma_sq" }.into(),
        chains: samples.chains.iter().map(|c| c.scale.clone()).collect(),
    });
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPsrf {
    pub name: String,
    pub psrf: Psrf,
    pub trace: Vec<(usize, Psrf)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsrfReport {
    /// Whether each chain was split in halves.
    pub split: bool,
    pub chains_used: usize,
    /// Stored draws per (possibly split) chain.
    pub draws: usize,
    /// Sweep index of the last stored draw.
    pub iteration: usize,
    pub cutoff: f64,
    pub selected: Vec<usize>,
    pub parameters: Vec<ParameterPsrf>,
    pub converged: bool,
    pub max_psrf: f64,
}

/// PSRF for the tracked parameters of a fit. Without `split`, at least two
/// chains are required.
pub fn diagnose(
    samples: &PosteriorSamples,
    split: bool,
    checkpoint_step: usize,
    threshold: f64,
    level: f64,
) -> Result<PsrfReport> {
    if !split && samples.chains.len() < 2 {
        return Err(Error::invalid(
            "PSRF needs at least two chains; rerun with more chains or use split-chain mode",
        ));
    }
    let selected = select(samples, threshold, level)?;
    let tracked = tracked_parameters(samples, &selected);
    let mut parameters = Vec::with_capacity(tracked.len());
    let mut draws = 0;
    for tp in &tracked {
        let views: Vec<&[f64]> = if split {
            tp.chains.iter().flat_map(|c| split_chain(c)).collect()
        } else {
            tp.chains.iter().map(|c| c.as_slice()).collect()
        };
        draws = views[0].len();
        let checkpoints = default_checkpoints(draws, checkpoint_step);
        parameters.push(ParameterPsrf {
            name: tp.name.clone(),
            psrf: psrf(&views)?,
            trace: psrf_trace(&views, &checkpoints)?,
        });
    }
    let converged = parameters.iter().all(|p| p.psrf.converged(PSRF_CUTOFF));
    let max_psrf = parameters.iter().map(|p| p.psrf.value).fold(0.0, f64::max);
    Ok(PsrfReport {
        split,
        chains_used: if split { 2 * samples.chains.len() } else { samples.chains.len() },
        draws,
        iteration: samples.burn_in + samples.draws() * samples.thin,
        cutoff: PSRF_CUTOFF,
        selected,
        parameters,
        converged,
        max_psrf,
    })
}
