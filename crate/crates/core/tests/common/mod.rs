#![allow(dead_code)]

use qvcss::basis::SplineConfig;
use qvcss::data::Matrix;
use qvcss::sampler::Design;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Design with `p + 1` standard normal blocks of width `d` and `q` columns in `E`.
pub fn random_design(n: usize, p: usize, d: usize, q: usize, rng: &mut ChaCha8Rng) -> Design {
    Design {
        spline: SplineConfig::new(1, d.saturating_sub(2)),
        blocks: (0..=p).map(|_| Matrix::from_fn(n, d, |_, _| normal(rng))).collect(),
        e: Matrix::from_fn(n, q, |_, _| normal(rng)),
    }
}

pub struct Moments {
    pub mean: f64,
    pub var: f64,
    pub mean_se: f64,
    pub var_se: f64,
}

/// Sample mean and variance with standard errors from the sample itself.
pub fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    Moments {
        mean,
        var,
        mean_se: (var / n).sqrt(),
        var_se: ((m4 - var * var).max(0.0) / n).sqrt(),
    }
}

/// Asserts that the first two sample moments agree with the expected ones to
/// within four standard errors.
pub fn assert_moments(name: &str, x: &[f64], mean: f64, var: f64) {
    let m = moments(x);
    assert!(
        (m.mean - mean).abs() < 4.0 * m.mean_se,
        "{name}: mean {} vs {mean} (se {})",
        m.mean,
        m.mean_se
    );
    assert!(
        (m.var - var).abs() < 4.0 * m.var_se,
        "{name}: variance {} vs {var} (se {})",
        m.var,
        m.var_se
    );
}

pub fn gamma_moments(shape: f64, rate: f64) -> (f64, f64) {
    (shape / rate, shape / (rate * rate))
}

pub fn inverse_gamma_moments(shape: f64, scale: f64) -> (f64, f64) {
    let m = scale / (shape - 1.0);
    (m, m * m / (shape - 2.0))
}

pub fn inverse_gaussian_moments(mean: f64, shape: f64) -> (f64, f64) {
    (mean, mean.powi(3) / shape)
}

pub fn beta_moments(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Largest gap between the empirical CDF of `draws` and the CDF of the
/// unnormalized density `f` on `[0, upper]`. The density is integrated in
/// `x = s²` so an `x^{-1/2}` singularity at zero stays harmless.
pub fn cdf_gap(draws: &mut [f64], f: impl Fn(f64) -> f64, upper: f64) -> f64 {
    draws.sort_by(|a, b| a.total_cmp(b));
    let panels = 4000;
    let smax = upper.sqrt();
    let h = smax / panels as f64;
    let g = |s: f64| 2.0 * s * f(s * s);
    let mut cum = vec![0.0; panels + 1];
    for k in 0..panels {
        let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
        cum[k + 1] = cum[k] + (b - a) / 6.0 * (g(a) + 4.0 * g(0.5 * (a + b)) + g(b));
    }
    let total = cum[panels];
    let n = draws.len() as f64;
    let mut gap: f64 = 0.0;
    for k in (0..=panels).step_by(20) {
        let x = (k as f64 * h).powi(2);
        let ecdf = draws.partition_point(|&d| d <= x) as f64 / n;
        gap = gap.max((ecdf - cum[k] / total).abs());
    }
    gap
}
