//! Selection and estimation accuracy.

use serde::{Deserialize, Serialize};

use crate::inference::CurveEstimate;
use crate::{Error, Result};

/// Correct, over- or under-fitted selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FitClassification {
    C,
    O,
    U,
}

impl FitClassification {
    pub fn label(self) -> &'static str {
        match self {
            FitClassification::C => "C",
            FitClassification::O => "O",
            FitClassification::U => "U",
        }
    }
}

/// `U` if any true index is missed, `C` on an exact match, `O` otherwise.
pub fn classify_fit(selected: &[usize], truth: &[usize]) -> FitClassification {
    if truth.iter().any(|t| !selected.contains(t)) {
        FitClassification::U
    } else if selected.iter().all(|s| truth.contains(s)) {
        FitClassification::C
    } else {
        FitClassification::O
    }
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {} (need equal and nonzero)",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Mean squared difference over the grid.
pub fn imse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    same_len(estimate, truth)?;
    Ok(estimate.iter().zip(truth).map(|(e, t)| (e - t) * (e - t)).sum::<f64>() / truth.len() as f64)
}

/// Sum of per-curve IMSEs.
pub fn timse(per_curve: &[f64]) -> f64 {
    per_curve.iter().sum()
}

/// Fraction of grid points with `lower ≤ truth ≤ upper`.
pub fn coverage(lower: &[f64], upper: &[f64], truth: &[f64]) -> Result<f64> {
    same_len(lower, truth)?;
    same_len(upper, truth)?;
    let hits = lower
        .iter()
        .zip(upper)
        .zip(truth)
        .filter(|((l, u), t)| *l <= *t && *t <= *u)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn pmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    imse(yhat, y)
}

pub fn pmad(y: &[f64], yhat: &[f64]) -> Result<f64> {
    same_len(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

/// Metrics of one fit against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetrics {
    pub classification: FitClassification,
    pub selected: Vec<usize>,
    pub truth: Vec<usize>,
    /// IMSE of curves `0..=p`.
    pub imse: Vec<f64>,
    pub timse: f64,
    /// Grid coverage of curves `0..=p`.
    pub coverage: Vec<f64>,
}

/// Scores estimated curves (indexed by `j`) against true curves on the
/// same grid.
pub fn evaluate_fit(
    selected: &[usize],
    truth: &[usize],
    curves: &[CurveEstimate],
    true_curves: &[Vec<f64>],
) -> Result<FitMetrics> {
    if curves.len() != true_curves.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimated curves against {} true curves",
            curves.len(),
            true_curves.len()
        )));
    }
    let mut imses = Vec::with_capacity(curves.len());
    let mut cov = Vec::with_capacity(curves.len());
    for (c, t) in curves.iter().zip(true_curves) {
        imses.push(imse(&c.median, t)?);
        cov.push(coverage(&c.lower, &c.upper, t)?);
    }
    Ok(FitMetrics {
        classification: classify_fit(selected, truth),
        selected: selected.to_vec(),
        truth: truth.to_vec(),
        timse: timse(&imses),
        imse: imses,
        coverage: cov,
    })
}

/// Mean and sample standard deviation.
pub fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// `mean(sd)` rounded to two decimals, e.g. `0.21(0.06)`.
pub fn format_mean_sd(x: &[f64]) -> String {
    let (m, s) = mean_sd(x);
    format!("{m:.2}({s:.2})")
}

/// Replicate-level aggregate of one method on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub replicates: usize,
    pub c: f64,
    pub o: f64,
    pub u: f64,
    pub timse_mean: f64,
    pub timse_sd: f64,
    pub timse: String,
    /// Per-curve coverage averaged over replicates.
    pub coverage: Vec<f64>,
}

pub fn aggregate(fits: &[FitMetrics]) -> Result<AggregateMetrics> {
    if fits.is_empty() {
        return Err(Error::invalid("no fits to aggregate"));
    }
    let r = fits.len() as f64;
    let frac = |k: FitClassification| fits.iter().filter(|f| f.classification == k).count() as f64 / r;
    let timses: Vec<f64> = fits.iter().map(|f| f.timse).collect();
    let (m, s) = mean_sd(&timses);
    let curves = fits[0].coverage.len();
    if fits.iter().any(|f| f.coverage.len() != curves) {
        return Err(Error::DimensionMismatch("fits have different curve counts".into()));
    }
    let coverage = (0..curves)
        .map(|j| fits.iter().map(|f| f.coverage[j]).sum::<f64>() / r)
        .collect();
    Ok(AggregateMetrics {
        replicates: fits.len(),
        c: frac(FitClassification::C),
        o: frac(FitClassification::O),
        u: frac(FitClassification::U),
        timse_mean: m,
        timse_sd: s,
        timse: format_mean_sd(&timses),
        coverage,
    })
}
