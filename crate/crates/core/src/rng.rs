//! Seeded random streams and the variate generators used by the samplers.
//!
//! Gamma variates use the shape–rate convention everywhere (mean
//! `shape / rate`); the inverse gamma takes `(shape, scale)` and is the
//! reciprocal of `Gamma(shape, rate = scale)`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Cholesky;
use crate::{Error, Result};

/// A reproducible random stream identified by `(seed, stream_id)`.
///
/// Backed by a counter-based ChaCha generator with the stream id mapped to
/// the ChaCha stream, so each chain owns an independent sequence that does
/// not depend on scheduling.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

impl RngCore for RngHandle {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Uniform on the open interval `(0, 1)`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Inverse Gaussian `IG(mean, shape)` by the Michael–Schucany–Haas
/// transformation with one uniform acceptance step.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(rng: &mut R, mean: f64, shape: f64) -> Result<f64> {
    require_positive("inverse Gaussian mean", mean)?;
    require_positive("inverse Gaussian shape", shape)?;
    let z = standard_normal(rng);
    let y = mean * z * z;
    // Smaller root of the chi-square transformation, written without the
    // cancellation in `y - sqrt(y² + 4λy)` for large y.
    let root = (y * y + 4.0 * shape * y).sqrt();
    let denom = y + root;
    let x = if denom > 0.0 {
        mean * 4.0 * shape * y / (denom * denom)
    } else {
        mean
    };
    let x = if x > 0.0 { x } else { f64::MIN_POSITIVE };
    let u: f64 = rng.random();
    if u <= mean / (mean + x) {
        Ok(x)
    } else {
        Ok(mean * mean / x)
    }
}

/// `Gamma(shape, rate)` with mean `shape / rate`.
pub fn sample_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> Result<f64> {
    require_positive("gamma shape", shape)?;
    require_positive("gamma rate", rate)?;
    let g = rand_distr::Gamma::new(shape, 1.0 / rate).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(g.sample(rng).max(f64::MIN_POSITIVE))
}

/// `Inverse-Gamma(shape, scale)`: reciprocal of `Gamma(shape, rate = scale)`.
pub fn sample_inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    require_positive("inverse gamma shape", shape)?;
    require_positive("inverse gamma scale", scale)?;
    Ok(1.0 / sample_gamma(rng, shape, scale)?)
}

pub fn sample_beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> Result<f64> {
    require_positive("beta a", a)?;
    require_positive("beta b", b)?;
    let beta = rand_distr::Beta::new(a, b).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(beta.sample(rng))
}

pub fn sample_bernoulli<R: Rng + ?Sized>(rng: &mut R, prob: f64) -> Result<bool> {
    if !(0.0..=1.0).contains(&prob) {
        return Err(Error::invalid(format!("bernoulli probability {prob} outside [0,1]")));
    }
    if prob == 0.0 {
        return Ok(false);
    }
    if prob == 1.0 {
        return Ok(true);
    }
    Ok(rng.random::<f64>() < prob)
}

pub fn sample_exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> Result<f64> {
    require_positive("exponential rate", rate)?;
    Ok(-open_unit(rng).ln() / rate)
}

/// Draw from `N(mean, covariance)` as `mean + L z`.
pub fn sample_mvn<R: Rng + ?Sized>(rng: &mut R, mean: &[f64], covariance: &[f64]) -> Result<Vec<f64>> {
    let k = mean.len();
    let chol = Cholesky::new(covariance, k)?;
    let z: Vec<f64> = (0..k).map(|_| standard_normal(rng)).collect();
    let mut out = vec![0.0; k];
    chol.lower_mul(&z, &mut out);
    out.iter_mut().zip(mean).for_each(|(o, m)| *o += m);
    Ok(out)
}

/// Draw from `N(P⁻¹b, P⁻¹)` given the Cholesky factor of the precision `P`
/// and `mean = P⁻¹b`, writing into `out`: `mean + L⁻ᵀ z`.
pub fn sample_mvn_precision<R: Rng + ?Sized>(
    rng: &mut R,
    mean: &[f64],
    precision: &Cholesky,
    out: &mut [f64],
) {
    for o in out.iter_mut() {
        *o = standard_normal(rng);
    }
    precision.solve_upper_in_place(out);
    out.iter_mut().zip(mean).for_each(|(o, m)| *o += m);
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Mean, variance and the standard error of each from `draws`.
    fn moments(draws: &[f64]) -> (f64, f64, f64, f64) {
        let n = draws.len() as f64;
        let mean = draws.iter().sum::<f64>() / n;
        let m2 = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = draws.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let se_mean = (m2 / n).sqrt();
        let se_var = ((m4 - m2 * m2) / n).sqrt();
        (mean, m2, se_mean, se_var)
    }

    fn check(draws: &[f64], mean: f64, var: f64) {
        let (m, v, sm, sv) = moments(draws);
        assert!((m - mean).abs() < 3.0 * sm, "mean {m} vs {mean} (se {sm})");
        assert!((v - var).abs() < 3.0 * sv, "var {v} vs {var} (se {sv})");
    }

    fn draws(n: usize, seed: u64, mut f: impl FnMut(&mut RngHandle) -> f64) -> Vec<f64> {
        let mut rng = RngHandle::new(seed, 0);
        (0..n).map(|_| f(&mut rng)).collect()
    }

    #[test]
    fn inverse_gaussian_moments() {
        let d = draws(1_000_000, 1, |r| sample_inverse_gaussian(r, 2.0, 5.0).unwrap());
        check(&d, 2.0, 8.0 / 5.0);
        let d = draws(1_000_000, 2, |r| sample_inverse_gaussian(r, 1.0, 4.0).unwrap());
        check(&d, 1.0, 0.25);
    }

    #[test]
    fn inverse_gaussian_degenerate_shape() {
        let d = draws(10_000, 3, |r| sample_inverse_gaussian(r, 1.0, 1e8).unwrap());
        let (_, v, _, _) = moments(&d);
        assert!(v.sqrt() < 1e-3);
    }

    #[test]
    fn inverse_gaussian_extreme_mean_stays_positive() {
        let mut rng = RngHandle::new(4, 0);
        for _ in 0..10_000 {
            let x = sample_inverse_gaussian(&mut rng, 1e10, 0.5).unwrap();
            assert!(x > 0.0 && x.is_finite());
            let y = sample_inverse_gaussian(&mut rng, 1e-8, 1e6).unwrap();
            assert!(y > 0.0 && y.is_finite());
        }
    }

    #[test]
    fn gamma_moments() {
        let d = draws(1_000_000, 5, |r| sample_gamma(r, 1.0, 3.0).unwrap());
        check(&d, 1.0 / 3.0, 1.0 / 9.0);
        let d = draws(1_000_000, 6, |r| sample_gamma(r, 3.5, 2.0).unwrap());
        check(&d, 1.75, 3.5 / 4.0);
        let d = draws(1_000_000, 7, |r| sample_gamma(r, 0.5, 0.5).unwrap());
        check(&d, 1.0, 2.0);
    }

    #[test]
    fn inverse_gamma_moments() {
        // mean scale/(shape-1), var scale²/((shape-1)²(shape-2))
        let d = draws(1_000_000, 8, |r| sample_inverse_gamma(r, 5.0, 2.0).unwrap());
        check(&d, 0.5, 4.0 / (16.0 * 3.0));
        let (m, _, sm, _) = moments(&draws(1_000_000, 9, |r| sample_inverse_gamma(r, 3.0, 2.0).unwrap()));
        assert!((m - 1.0).abs() < 3.0 * sm);
    }

    #[test]
    fn inverse_gamma_is_reciprocal_gamma() {
        let mut a = RngHandle::new(10, 0);
        let mut b = RngHandle::new(10, 0);
        for _ in 0..1000 {
            let ig = sample_inverse_gamma(&mut a, 2.5, 1.5).unwrap();
            let g = sample_gamma(&mut b, 2.5, 1.5).unwrap();
            assert_eq!(ig, 1.0 / g);
        }
    }

    #[test]
    fn inverse_gamma_shape_two() {
        // variance is infinite at shape 2, so only the mean is checked
        let d = draws(1_000_000, 11, |r| sample_inverse_gamma(r, 2.0, 2.0).unwrap());
        let mut s = d.clone();
        s.sort_by(f64::total_cmp);
        // median of IG(2, 2) is 2 / Gamma(2,1).median = 2 / 1.678346990
        let med = s[s.len() / 2];
        assert!((med - 2.0 / 1.678_346_990_016_661_6).abs() < 0.01, "median {med}");
    }

    #[test]
    fn beta_uniform_ks() {
        let mut d = draws(100_000, 12, |r| sample_beta(r, 1.0, 1.0).unwrap());
        d.sort_by(f64::total_cmp);
        let n = d.len() as f64;
        let ks = d
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max((x - (i + 1) as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 1.63 / n.sqrt(), "ks {ks}");
    }

    #[test]
    fn beta_moments() {
        let d = draws(1_000_000, 13, |r| sample_beta(r, 8.0, 4.0).unwrap());
        check(&d, 2.0 / 3.0, 32.0 / (144.0 * 13.0));
        let d = draws(1_000_000, 14, |r| sample_beta(r, 0.5, 0.5).unwrap());
        check(&d, 0.5, 0.25 / 2.0);
    }

    #[test]
    fn bernoulli_and_exponential() {
        let mut rng = RngHandle::new(15, 0);
        for _ in 0..1000 {
            assert!(!sample_bernoulli(&mut rng, 0.0).unwrap());
            assert!(sample_bernoulli(&mut rng, 1.0).unwrap());
        }
        assert!(sample_bernoulli(&mut rng, 1.5).is_err());
        let d = draws(1_000_000, 16, |r| sample_bernoulli(r, 0.25).unwrap() as u8 as f64);
        check(&d, 0.25, 0.1875);
        let d = draws(1_000_000, 17, |r| sample_exponential(r, 2.0).unwrap());
        check(&d, 0.5, 0.25);
    }

    #[test]
    fn parameter_validation() {
        let mut rng = RngHandle::new(0, 0);
        assert!(sample_inverse_gaussian(&mut rng, 0.0, 1.0).is_err());
        assert!(sample_inverse_gaussian(&mut rng, 1.0, -1.0).is_err());
        assert!(sample_gamma(&mut rng, 0.0, 1.0).is_err());
        assert!(sample_gamma(&mut rng, 1.0, f64::NAN).is_err());
        assert!(sample_inverse_gamma(&mut rng, 1.0, 0.0).is_err());
        assert!(sample_beta(&mut rng, -1.0, 1.0).is_err());
        assert!(sample_exponential(&mut rng, 0.0).is_err());
    }

    #[test]
    fn mvn_degenerate_and_failure() {
        let mut rng = RngHandle::new(18, 0);
        let cov = crate::linalg::identity(3, 1e-16);
        let x = sample_mvn(&mut rng, &[1.0, 2.0, 3.0], &cov).unwrap();
        for (a, b) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-7);
        }
        let bad = vec![1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            sample_mvn(&mut rng, &[0.0, 0.0], &bad),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn mvn_correlation() {
        let mut rng = RngHandle::new(19, 0);
        let n = 100_000;
        let cov = [1.0, 0.5, 0.5, 1.0];
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let z = sample_mvn(&mut rng, &[0.0, 0.0], &cov).unwrap();
            sx += z[0];
            sy += z[1];
            sxy += z[0] * z[1];
            sxx += z[0] * z[0];
            syy += z[1] * z[1];
        }
        let nf = n as f64;
        let cxy = sxy / nf - sx * sy / nf / nf;
        let r = cxy / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        // SE of a sample correlation ≈ (1 − ρ²)/√n
        assert!((r - 0.5).abs() < 3.0 * 0.75 / nf.sqrt(), "r = {r}");
    }

    #[test]
    fn mvn_identity_marginals() {
        let mut rng = RngHandle::new(20, 0);
        let id = crate::linalg::identity(2, 1.0);
        let xs: Vec<f64> = (0..200_000)
            .map(|_| sample_mvn(&mut rng, &[0.0, 0.0], &id).unwrap()[1])
            .collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        let skew = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n / v.powf(1.5);
        let kurt = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n / (v * v);
        assert!(skew.abs() < 3.0 * (6.0 / n).sqrt());
        assert!((kurt - 3.0).abs() < 3.0 * (24.0 / n).sqrt());
    }

    #[test]
    fn precision_form_matches_covariance_form_moments() {
        let prec = [2.0, 0.3, 0.3, 1.0];
        let chol = Cholesky::new(&prec, 2).unwrap();
        let cov = chol.inverse();
        let mut rng = RngHandle::new(21, 0);
        let mut out = [0.0; 2];
        let n = 200_000;
        let (mut s00, mut s01) = (0.0, 0.0);
        for _ in 0..n {
            sample_mvn_precision(&mut rng, &[0.0, 0.0], &chol, &mut out);
            s00 += out[0] * out[0];
            s01 += out[0] * out[1];
        }
        let nf = n as f64;
        assert!((s00 / nf - cov[0]).abs() < 4.0 * cov[0] * (2.0 / nf).sqrt());
        assert!((s01 / nf - cov[1]).abs() < 0.01);
    }

    #[test]
    fn streams_reproducible_and_independent() {
        let a: Vec<u64> = {
            let mut r = RngHandle::new(42, 3);
            (0..100).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = RngHandle::new(42, 3);
            (0..100).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);

        let n = 100_000;
        let mut r0 = RngHandle::new(42, 0);
        let mut r1 = RngHandle::new(42, 1);
        let x: Vec<f64> = (0..n).map(|_| r0.random::<f64>()).collect();
        let y: Vec<f64> = (0..n).map(|_| r1.random::<f64>()).collect();
        assert_ne!(x[..10], y[..10]);
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let cov: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>();
        let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
        let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>();
        assert!((cov / (vx * vy).sqrt()).abs() < 0.01);
    }
}
