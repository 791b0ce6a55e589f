//! Posterior summaries: inclusion probabilities and the median probability
//! model, credible-interval selection, pointwise curve bands and scalar
//! summaries.
//!
//! Quantiles are the linear-interpolation (type 7) sample quantiles, so the
//! median of `{1, 3}` is 2.

use serde::{Deserialize, Serialize};

use crate::basis::{uniform_grid, SplineBasis};
use crate::exec::Execution;
use crate::sampler::PosteriorSamples;
use crate::{Error, Result};

/// Type-7 quantile of unsorted data, reordering `values`.
pub fn quantile_in_place(values: &mut [f64], prob: f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    let (_, &mut x_lo, rest) = values.select_nth_unstable_by(lo, f64::total_cmp);
    if frac == 0.0 || rest.is_empty() {
        return x_lo;
    }
    let x_hi = rest.iter().copied().fold(f64::INFINITY, f64::min);
    x_lo + frac * (x_hi - x_lo)
}

/// Type-7 quantiles at several probabilities.
pub fn quantiles(values: &[f64], probs: &[f64]) -> Vec<f64> {
    let mut buf = values.to_vec();
    probs.iter().map(|&p| quantile_in_place(&mut buf, p)).collect()
}

fn tail_probs(level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("credible level {level} outside (0,1)")));
    }
    let a = (1.0 - level) / 2.0;
    Ok((a, 1.0 - a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionSummary {
    /// `p_j` for `j = 1..=p`.
    pub probs: Vec<f64>,
    /// Selected block indices (1-based).
    pub selected: Vec<usize>,
    pub threshold: f64,
}

/// Fraction of stored draws (all chains) with `α_j ≠ 0`, selecting blocks
/// with `p_j ≥ threshold`.
pub fn inclusion_probabilities(samples: &PosteriorSamples, threshold: f64) -> Result<InclusionSummary> {
    if !samples.method.has_spike() {
        return Err(Error::Unsupported(format!(
            "{} has no point mass; use credible-interval selection instead",
            samples.method
        )));
    }
    let total = samples.total_draws();
    if total == 0 {
        return Err(Error::invalid("no stored draws"));
    }
    let p = samples.p;
    let mut counts = vec![0usize; p];
    for ch in &samples.chains {
        for row in ch.inclusion.chunks_exact(p.max(1)).take(ch.draws) {
            for (c, &q) in counts.iter_mut().zip(row) {
                *c += q as usize;
            }
        }
    }
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let selected = probs
        .iter()
        .enumerate()
        .filter(|(_, &pj)| pj >= threshold)
        .map(|(j, _)| j + 1)
        .collect();
    Ok(InclusionSummary {
        probs,
        selected,
        threshold,
    })
}

/// Draws of spline coefficient `s` of block `j`, pooled over chains.
pub fn coefficient_draws(samples: &PosteriorSamples, j: usize, s: usize) -> Vec<f64> {
    let width = samples.alpha_width();
    let col = j * samples.d + s;
    samples
        .chains
        .iter()
        .flat_map(|ch| ch.alpha.chunks_exact(width).map(move |row| row[col]))
        .collect()
}

/// Blocks `j ≥ 1` for which at least one spline coefficient has an
/// equal-tailed credible interval excluding zero.
pub fn ci_selection(samples: &PosteriorSamples, level: f64) -> Result<Vec<usize>> {
    let (lo, hi) = tail_probs(level)?;
    let mut selected = Vec::new();
    for j in 1..=samples.p {
        let excluded = (0..samples.d).any(|s| {
            let mut draws = coefficient_draws(samples, j, s);
            let l = quantile_in_place(&mut draws, lo);
            let u = quantile_in_place(&mut draws, hi);
            l > 0.0 || u < 0.0
        });
        if excluded {
            selected.push(j);
        }
    }
    Ok(selected)
}

/// Selection rule for the sampler: median probability model for the
/// spike-and-slab samplers, credible intervals otherwise.
pub fn select(samples: &PosteriorSamples, threshold: f64, level: f64) -> Result<Vec<usize>> {
    if samples.method.has_spike() {
        Ok(inclusion_probabilities(samples, threshold)?.selected)
    } else {
        ci_selection(samples, level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEstimate {
    pub j: usize,
    pub grid: Vec<f64>,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CurveEstimate {
    fn zero(j: usize, grid: &[f64]) -> Self {
        let g = grid.len();
        Self {
            j,
            grid: grid.to_vec(),
            median: vec![0.0; g],
            lower: vec![0.0; g],
            upper: vec![0.0; g],
        }
    }
}

/// Pointwise posterior median and equal-tailed band of `γ_j` on `grid`.
pub fn curve_estimate(
    samples: &PosteriorSamples,
    basis: &SplineBasis,
    grid: &[f64],
    j: usize,
    level: f64,
) -> Result<CurveEstimate> {
    let (lo, hi) = tail_probs(level)?;
    if j > samples.p {
        return Err(Error::invalid(format!("curve index {j} exceeds p = {}", samples.p)));
    }
    if basis.dim() != samples.d {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} functions, samples have d = {}",
            basis.dim(),
            samples.d
        )));
    }
    let d = samples.d;
    let width = samples.alpha_width();
    let blocks: Vec<&[f64]> = samples
        .chains
        .iter()
        .flat_map(|ch| ch.alpha.chunks_exact(width).map(move |row| &row[j * d..(j + 1) * d]))
        .collect();
    if blocks.is_empty() {
        return Err(Error::invalid("no stored draws"));
    }
    if blocks.iter().all(|b| b.iter().all(|&a| a == 0.0)) {
        return Ok(CurveEstimate::zero(j, grid));
    }
    let mut est = CurveEstimate::zero(j, grid);
    let mut pi = vec![0.0; d];
    let mut values = vec![0.0; blocks.len()];
    for (t, &v) in grid.iter().enumerate() {
        basis.evaluate_into(v, &mut pi)?;
        for (val, b) in values.iter_mut().zip(&blocks) {
            *val = b.iter().zip(&pi).map(|(a, p)| a * p).sum();
        }
        est.median[t] = quantile_in_place(&mut values, 0.5);
        est.lower[t] = quantile_in_place(&mut values, lo);
        est.upper[t] = quantile_in_place(&mut values, hi);
    }
    Ok(est)
}

/// Curves `0..=p` on a uniform grid of `grid_points`.
pub fn curve_estimates(
    samples: &PosteriorSamples,
    grid_points: usize,
    level: f64,
    execution: Execution,
) -> Result<Vec<CurveEstimate>> {
    let basis = SplineBasis::new(samples.spline);
    let grid = uniform_grid(grid_points);
    execution.try_map(samples.p + 1, |j| curve_estimate(samples, &basis, &grid, j, level))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarSummary {
    pub name: String,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

fn summarize(name: String, draws: &mut [f64], lo: f64, hi: f64) -> ScalarSummary {
    ScalarSummary {
        name,
        median: quantile_in_place(draws, 0.5),
        lower: quantile_in_place(draws, lo),
        upper: quantile_in_place(draws, hi),
    }
}

/// Medians and credible intervals of `β`, the likelihood scale (`theta` or
/// `sigma_sq`), the shrinkage parameter (`eta_sq` or `lambda_sq`) and `pi0`.
pub fn posterior_scalar_summaries(samples: &PosteriorSamples, level: f64) -> Result<Vec<ScalarSummary>> {
    let (lo, hi) = tail_probs(level)?;
    if samples.total_draws() == 0 {
        return Err(Error::invalid("no stored draws"));
    }
    let quantile = samples.method.is_quantile();
    let mut out = Vec::new();
    for k in 0..samples.q {
        let mut draws: Vec<f64> = samples
            .chains
            .iter()
            .flat_map(|ch| ch.beta.chunks_exact(samples.q).map(move |r| r[k]))
            .collect();
        out.push(summarize(format!("beta_{}", k + 1), &mut draws, lo, hi));
    }
    let pooled = |f: fn(&crate::sampler::ChainSamples) -> &Vec<f64>| -> Vec<f64> {
        samples.chains.iter().flat_map(|c| f(c).iter().copied()).collect()
    };
    let (scale, shrink) = if quantile { ("theta", "eta_sq") } else { ("sigma_sq", "lambda_sq") };
    out.push(summarize(scale.into(), &mut pooled(|c| &c.scale), lo, hi));
    out.push(summarize(shrink.into(), &mut pooled(|c| &c.shrinkage), lo, hi));
    if samples.method.has_spike() {
        out.push(summarize("pi0".into(), &mut pooled(|c| &c.pi0), lo, hi));
    }
    Ok(out)
}
