//! Simulation scenarios: AR(1) gene-expression or SNP covariates, five error
//! families centered at the target quantile, optional heteroscedasticity.
//!
//! Draw order within a dataset is fixed: covariates, then `V`, then errors.

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::ald::QuantileLevel;
use crate::data::{Dataset, Matrix};
use crate::rng::{open_unit, standard_normal, RngHandle};
use crate::{Error, Result};

/// Stream reserved for data generation, away from the chain streams.
pub const SIMULATION_STREAM: u64 = 1 << 32;

/// Indices of the nonzero selectable curves.
pub const TRUE_SUPPORT: [usize; 3] = [1, 2, 3];

/// AR(1) correlation between neighbouring predictors.
pub const AR_RHO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateKind {
    Gene,
    Snp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Normal,
    NormalMixture,
    Laplace,
    Lognormal,
    T2,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 5] = [
        ErrorKind::Normal,
        ErrorKind::NormalMixture,
        ErrorKind::Laplace,
        ErrorKind::Lognormal,
        ErrorKind::T2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Normal => "normal",
            ErrorKind::NormalMixture => "normal_mixture",
            ErrorKind::Laplace => "laplace",
            ErrorKind::Lognormal => "lognormal",
            ErrorKind::T2 => "t2",
        }
    }
}

impl std::str::FromStr for ErrorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ErrorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown error kind '{s}'")))
    }
}

impl std::str::FromStr for CovariateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gene" => Ok(CovariateKind::Gene),
            "snp" => Ok(CovariateKind::Snp),
            _ => Err(Error::invalid(format!("unknown covariate kind '{s}'"))),
        }
    }
}

/// How the "3" of the `0.8 N(0,1) + 0.2 N(0,3)` mixture is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixtureScale {
    #[default]
    Variance,
    Sd,
}

impl MixtureScale {
    fn wide_sd(self) -> f64 {
        match self {
            MixtureScale::Variance => 3f64.sqrt(),
            MixtureScale::Sd => 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub covariate_kind: CovariateKind,
    pub error_kind: ErrorKind,
    pub heteroscedastic: bool,
    pub tau: QuantileLevel,
    pub seed: u64,
    /// Replace the intercept curve by the high-frequency `2 + 2 sin(6πv)`.
    pub hard_intercept: bool,
    pub mixture_scale: MixtureScale,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            n: 200,
            p: 100,
            covariate_kind: CovariateKind::Gene,
            error_kind: ErrorKind::Normal,
            heteroscedastic: false,
            tau: QuantileLevel::median(),
            seed: 1,
            hard_intercept: false,
            mixture_scale: MixtureScale::default(),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("scenario needs n > 0"));
        }
        if self.heteroscedastic && self.p < 2 {
            return Err(Error::invalid("heteroscedastic errors need at least two predictors"));
        }
        Ok(())
    }

    pub fn curves(&self) -> TrueCurves {
        TrueCurves {
            p: self.p,
            hard_intercept: self.hard_intercept,
        }
    }

    /// Short label such as `gene-iid-normal-tau0.5`.
    pub fn label(&self) -> String {
        format!(
            "{}-{}-{}-tau{}{}",
            match self.covariate_kind {
                CovariateKind::Gene => "gene",
                CovariateKind::Snp => "snp",
            },
            if self.heteroscedastic { "hetero" } else { "iid" },
            self.error_kind.name(),
            self.tau.value(),
            if self.hard_intercept { "-hard" } else { "" }
        )
    }
}

/// `γ_j(v)` of the simulation truth; zero for `j > 3`.
pub fn true_gamma(j: usize, v: f64) -> f64 {
    use std::f64::consts::PI;
    match j {
        0 => 2.0 + 2.0 * (2.0 * PI * v).sin(),
        1 => 2.0 * (2.0 * v - 1.0).exp(),
        2 => -6.0 * v * (1.0 - v),
        3 => -4.0 * v.powi(3),
        _ => 0.0,
    }
}

/// High-frequency intercept `γ₀*(v) = 2 + 2 sin(6πv)`.
pub fn hard_intercept(v: f64) -> f64 {
    2.0 + 2.0 * (6.0 * std::f64::consts::PI * v).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueCurves {
    pub p: usize,
    pub hard_intercept: bool,
}

impl TrueCurves {
    pub fn gamma(&self, j: usize, v: f64) -> f64 {
        if j == 0 && self.hard_intercept {
            hard_intercept(v)
        } else {
            true_gamma(j, v)
        }
    }

    /// Curves `0..=p` on `grid`, one row per curve.
    pub fn on_grid(&self, grid: &[f64]) -> Vec<Vec<f64>> {
        (0..=self.p).map(|j| grid.iter().map(|&v| self.gamma(j, v)).collect()).collect()
    }

    pub fn support(&self) -> Vec<usize> {
        TRUE_SUPPORT.iter().copied().filter(|&j| j <= self.p).collect()
    }
}

/// Rows i.i.d. `N(0, Σ)` with `Σ_jk = 0.5^|j−k|`, generated by the AR(1)
/// recursion `x_1 = z_1`, `x_k = ρ x_{k−1} + √(1−ρ²) z_k`.
pub fn generate_gene_covariates<R: Rng + ?Sized>(rng: &mut R, n: usize, p: usize) -> Matrix {
    let innov = (1.0 - AR_RHO * AR_RHO).sqrt();
    let mut m = Matrix::zeros(n, p);
    for i in 0..n {
        let row = m.row_mut(i);
        for k in 0..p {
            let z = standard_normal(rng);
            row[k] = if k == 0 { z } else { AR_RHO * row[k - 1] + innov * z };
        }
    }
    m
}

/// Linear-interpolation (type 7) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * prob.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Maps each column to {0, 1, 2} by its first and third quartiles; values on
/// a quartile go to the middle class.
pub fn dichotomize_snp(genes: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(genes.rows(), genes.cols());
    for j in 0..genes.cols() {
        let mut col = genes.column(j);
        col.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&col, 0.25);
        let q3 = quantile_sorted(&col, 0.75);
        for i in 0..genes.rows() {
            let x = genes.get(i, j);
            let c = if x < q1 {
                0.0
            } else if x > q3 {
                2.0
            } else {
                1.0
            };
            out.set(i, j, c);
        }
    }
    out
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// `τ`-quantile of the uncentered error law.
pub fn error_quantile(kind: ErrorKind, tau: QuantileLevel, mixture: MixtureScale) -> f64 {
    let t = tau.value();
    match kind {
        ErrorKind::Normal => std_normal().inverse_cdf(t),
        ErrorKind::NormalMixture => {
            let s = mixture.wide_sd();
            let nrm = std_normal();
            let cdf = |x: f64| 0.8 * nrm.cdf(x) + 0.2 * nrm.cdf(x / s);
            let (mut lo, mut hi) = (-50.0, 50.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if cdf(mid) < t {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
        ErrorKind::Laplace => {
            if t < 0.5 {
                (2.0 * t).ln()
            } else {
                -(2.0 * (1.0 - t)).ln()
            }
        }
        ErrorKind::Lognormal => std_normal().inverse_cdf(t).exp(),
        ErrorKind::T2 => (2.0 * t - 1.0) / (2.0 * t * (1.0 - t)).sqrt(),
    }
}

fn raw_error<R: Rng + ?Sized>(rng: &mut R, kind: ErrorKind, mixture: MixtureScale, t2: &StudentT<f64>) -> f64 {
    match kind {
        ErrorKind::Normal => standard_normal(rng),
        ErrorKind::NormalMixture => {
            let wide = rng.random::<f64>() >= 0.8;
            let z = standard_normal(rng);
            if wide {
                z * mixture.wide_sd()
            } else {
                z
            }
        }
        ErrorKind::Laplace => {
            let u = open_unit(rng) - 0.5;
            -u.signum() * (1.0 - 2.0 * u.abs()).ln()
        }
        ErrorKind::Lognormal => standard_normal(rng).exp(),
        ErrorKind::T2 => t2.sample(rng),
    }
}

/// `n` draws from the error law shifted so its `τ`-quantile is zero.
pub fn centered_error_sample<R: Rng + ?Sized>(
    rng: &mut R,
    kind: ErrorKind,
    tau: QuantileLevel,
    n: usize,
    mixture: MixtureScale,
) -> Vec<f64> {
    let shift = error_quantile(kind, tau, mixture);
    let t2 = StudentT::new(2.0).expect("valid degrees of freedom");
    (0..n).map(|_| raw_error(rng, kind, mixture, &t2) - shift).collect()
}

/// `Y_i = γ_0(V_i) + Σ_j γ_j(V_i) X_ij + ε_i`, the error multiplied by
/// `(1 + X_i2)` when heteroscedastic.
pub fn generate_response(
    x: &Matrix,
    v: &[f64],
    curves: &TrueCurves,
    errors: &[f64],
    heteroscedastic: bool,
) -> Result<Vec<f64>> {
    let n = v.len();
    if x.rows() != n || errors.len() != n {
        return Err(Error::DimensionMismatch("response inputs differ in length".into()));
    }
    if heteroscedastic && x.cols() < 2 {
        return Err(Error::invalid("heteroscedastic errors need X_2"));
    }
    let active = curves.support();
    Ok((0..n)
        .map(|i| {
            let mut y = curves.gamma(0, v[i]);
            for &j in &active {
                y += curves.gamma(j, v[i]) * x.get(i, j - 1);
            }
            let e = if heteroscedastic {
                (1.0 + x.get(i, 1)) * errors[i]
            } else {
                errors[i]
            };
            y + e
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: Dataset,
    pub curves: TrueCurves,
    pub support: Vec<usize>,
}

pub fn simulate_dataset(spec: &ScenarioSpec) -> Result<SimulatedData> {
    spec.validate()?;
    let mut rng = RngHandle::new(spec.seed, SIMULATION_STREAM);
    let genes = generate_gene_covariates(&mut rng, spec.n, spec.p);
    let x = match spec.covariate_kind {
        CovariateKind::Gene => genes,
        CovariateKind::Snp => dichotomize_snp(&genes),
    };
    let v: Vec<f64> = (0..spec.n).map(|_| rng.random::<f64>()).collect();
    let errors = centered_error_sample(&mut rng, spec.error_kind, spec.tau, spec.n, spec.mixture_scale);
    let curves = spec.curves();
    let y = generate_response(&x, &v, &curves, &errors, spec.heteroscedastic)?;
    let dataset = Dataset::new(v, x, Matrix::zeros(spec.n, 0), y)?;
    Ok(SimulatedData {
        support: curves.support(),
        dataset,
        curves,
    })
}
