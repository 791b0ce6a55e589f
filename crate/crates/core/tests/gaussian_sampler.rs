mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use qvcss::config::GaussianPriorConfig;
use qvcss::sampler::gaussian::{GaussianSampler, GaussianSamplerState};
use qvcss::sampler::{residual_without_block, BlockId, Design};

const DRAWS: usize = 100_000;

/// Blocks `1..=included` set to a fixed nonzero pattern, the rest zero.
fn with_included(s: &GaussianSampler<'_>, design: &Design, included: usize) -> GaussianSamplerState {
    let mut st = s.state.clone();
    let d = design.d();
    for j in 1..=design.p() {
        let on = j <= included;
        for (k, a) in st.coef.block_mut(j).iter_mut().enumerate() {
            *a = if on { 0.2 * (k as f64 + 1.0) - 0.1 * j as f64 } else { 0.0 };
        }
        st.coef.inclusion[j - 1] = on;
        debug_assert_eq!(on, st.coef.block(j)[..d].iter().any(|&a| a != 0.0));
    }
    st
}

#[test]
fn sigma_sq_shapes() {
    let mut r = rng(1);
    let design = random_design(20, 10, 5, 0, &mut r);
    let y: Vec<f64> = (0..20).map(|_| normal(&mut r)).collect();
    let priors = GaussianPriorConfig { s: 1.0, ..Default::default() };
    let mut ss = GaussianSampler::new(&design, &y, &priors, true).unwrap();
    let st = with_included(&ss, &design, 2);
    ss.set_state(st).unwrap();
    assert_eq!(ss.sigma_sq_parameters().0, 16.0);

    let mut plain = GaussianSampler::new(&design, &y, &priors, false).unwrap();
    let st = with_included(&plain, &design, 10);
    plain.set_state(st).unwrap();
    assert_eq!(plain.sigma_sq_parameters().0, 36.0);
}

#[test]
fn sigma_sq_conditional_moments() {
    let mut r = rng(2);
    let (n, p, d) = (12, 3, 2);
    let design = random_design(n, p, d, 1, &mut r);
    let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let priors = GaussianPriorConfig { s: 2.0, h: 0.5, ..Default::default() };
    let mut s = GaussianSampler::new(&design, &y, &priors, true).unwrap();
    let mut st = with_included(&s, &design, 2);
    st.zeta_sq = vec![0.5, 2.0, 1.5];
    s.set_state(st.clone()).unwrap();

    let rss: f64 = (0..n)
        .map(|i| residual_without_block(&st.coef, &design, &y, i, None, 0.0).powi(2))
        .sum();
    let penalty: f64 = (1..=2)
        .map(|j| st.coef.block(j).iter().map(|a| a * a).sum::<f64>() / st.zeta_sq[j - 1])
        .sum();
    let shape = n as f64 / 2.0 + d as f64 / 2.0 * 2.0 + priors.s;
    let scale = 0.5 * rss + 0.5 * penalty + priors.h;
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_sigma_sq(&mut r).unwrap();
            s.state.sigma_sq
        })
        .collect();
    let (m, v) = inverse_gamma_moments(shape, scale);
    assert_moments("sigma_sq", &draws, m, v);
}

#[test]
fn zeta_sq_conditional_moments() {
    let mut r = rng(3);
    let (n, p, d) = (5, 2, 3);
    let design = random_design(n, p, d, 0, &mut r);
    let y = vec![0.0; n];
    let mut s = GaussianSampler::new(&design, &y, &GaussianPriorConfig::default(), true).unwrap();
    let mut st = with_included(&s, &design, 1);
    st.sigma_sq = 0.8;
    st.lambda_sq = 3.0;
    s.set_state(st.clone()).unwrap();
    let norm_sq: f64 = st.coef.block(1).iter().map(|a| a * a).sum();
    let mut inv = Vec::with_capacity(DRAWS);
    let mut zero = Vec::with_capacity(DRAWS);
    for _ in 0..DRAWS {
        s.update_zeta_sq(&mut r).unwrap();
        inv.push(1.0 / s.state.zeta_sq[0]);
        zero.push(s.state.zeta_sq[1]);
    }
    let (m, v) = inverse_gaussian_moments((0.8 * 3.0 / norm_sq).sqrt(), 3.0);
    assert_moments("1/zeta_sq included", &inv, m, v);
    let (m, v) = gamma_moments((d as f64 + 1.0) / 2.0, 1.5);
    assert_moments("zeta_sq zero", &zero, m, v);
}

#[test]
fn lambda_sq_shape_and_moments() {
    let mut r = rng(4);
    let design = random_design(3, 10, 5, 0, &mut r);
    let priors = GaussianPriorConfig { t: 1.0, psi: 0.5, ..Default::default() };
    let mut s = GaussianSampler::new(&design, &[0.0; 3], &priors, true).unwrap();
    s.state.zeta_sq = (0..10).map(|j| 0.1 * (j + 1) as f64).collect();
    let (shape, rate) = s.lambda_sq_parameters();
    assert_eq!(shape, 31.0);
    assert!((rate - (0.5 * 5.5 + 0.5)).abs() < 1e-12);
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_lambda_sq(&mut r).unwrap();
            s.state.lambda_sq
        })
        .collect();
    let (m, v) = gamma_moments(shape, rate);
    assert_moments("lambda_sq", &draws, m, v);
}

#[test]
fn pi0_parameters_and_moments() {
    let mut r = rng(5);
    let design = random_design(3, 10, 2, 0, &mut r);
    let priors = GaussianPriorConfig { a: 1.0, b: 1.0, ..Default::default() };
    let mut s = GaussianSampler::new(&design, &[0.0; 3], &priors, true).unwrap();
    let st = with_included(&s, &design, 3);
    s.set_state(st).unwrap();
    assert_eq!(s.pi0_parameters(), (8.0, 4.0));
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_pi0(&mut r).unwrap();
            s.state.pi0
        })
        .collect();
    let (m, v) = beta_moments(8.0, 4.0);
    assert_moments("pi0", &draws, m, v);
}

#[test]
fn alpha_block_conditional_matches_ridge() {
    let mut r = rng(6);
    let (n, d) = (8, 2);
    let design = random_design(n, 2, d, 1, &mut r);
    let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let mut s = GaussianSampler::new(&design, &y, &GaussianPriorConfig::default(), false).unwrap();
    let mut st = with_included(&s, &design, 2);
    st.sigma_sq = 0.7;
    st.zeta_sq = vec![1.3, 0.4];
    s.set_state(st.clone()).unwrap();

    let j = 1;
    let z = DMatrix::from_fn(n, d, |i, k| design.blocks[j].get(i, k));
    let partial = DVector::from_fn(n, |i, _| {
        residual_without_block(&st.coef, &design, &y, i, Some(BlockId::Alpha(j)), 0.0)
    });
    // Mean Σ_j Zᵀr and covariance σ²Σ_j with Σ_j = (ZᵀZ + ζ⁻² I)⁻¹.
    let sigma_j = (z.transpose() * &z + DMatrix::identity(d, d) / st.zeta_sq[0])
        .try_inverse()
        .unwrap();
    let mean = &sigma_j * z.transpose() * partial;
    let cov = sigma_j * st.sigma_sq;
    let post = s.alpha_block_posterior(j).unwrap();
    for k in 0..d {
        assert!((post.mean[k] - mean[k]).abs() < 1e-10);
        for l in 0..d {
            assert!((post.covariance[k * d + l] - cov[(k, l)]).abs() < 1e-10);
        }
    }
    let mut draws = vec![Vec::with_capacity(DRAWS); d];
    for _ in 0..DRAWS {
        s.update_alpha_block(j, &mut r).unwrap();
        for k in 0..d {
            draws[k].push(s.state.coef.block(j)[k]);
        }
    }
    for k in 0..d {
        assert_moments(&format!("alpha[{k}]"), &draws[k], mean[k], cov[(k, k)]);
    }
}

#[test]
fn fixed_zero_pi0_reproduces_plain_sampler() {
    let mut r = rng(7);
    let n = 15;
    let design = random_design(n, 4, 3, 1, &mut r);
    let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let priors = GaussianPriorConfig::default();
    let mut ss = GaussianSampler::new(&design, &y, &priors, true).unwrap();
    let mut plain = GaussianSampler::new(&design, &y, &priors, false).unwrap();
    let mut st = ss.state.clone();
    st.pi0 = 0.0;
    ss.set_state(st).unwrap();
    ss.fix_pi0(true);
    let (mut r1, mut r2) = (rng(42), rng(42));
    for _ in 0..50 {
        ss.step(&mut r1).unwrap();
        plain.step(&mut r2).unwrap();
        assert_eq!(ss.state.coef, plain.state.coef);
        assert_eq!(ss.state.sigma_sq, plain.state.sigma_sq);
        assert_eq!(ss.state.zeta_sq, plain.state.zeta_sq);
    }
}

#[test]
fn plain_sampler_never_zeroes_and_invariants_hold() {
    let mut r = rng(8);
    let n = 20;
    let design = random_design(n, 5, 3, 1, &mut r);
    let y: Vec<f64> = (0..n).map(|_| normal(&mut r)).collect();
    let mut plain = GaussianSampler::new(&design, &y, &GaussianPriorConfig::default(), false).unwrap();
    let mut ss = GaussianSampler::new(&design, &y, &GaussianPriorConfig::default(), true).unwrap();
    for _ in 0..200 {
        plain.step(&mut r).unwrap();
        assert!(plain.state.coef.inclusion.iter().all(|&q| q));
        ss.step(&mut r).unwrap();
        ss.state.check().unwrap();
        for (i, res) in ss.residuals().iter().enumerate() {
            let direct = residual_without_block(&ss.state.coef, &design, &y, i, None, 0.0);
            assert!((res - direct).abs() < 1e-9);
        }
    }
}
