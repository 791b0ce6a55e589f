//! Normalized B-spline bases on `[0, 1]` and grouped design expansion.
//!
//! Knots are uniform in the interior with clamped boundaries (each endpoint
//! repeated `degree + 1` times), so the basis is a partition of unity on the
//! whole interval. Evaluation at `v = 1` takes the left limit.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Matrix};
use crate::{Error, Result};

/// Default number of curve-evaluation grid points.
pub const DEFAULT_GRID_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplineConfig {
    pub degree: usize,
    pub interior_knots: usize,
}

impl Default for SplineConfig {
    /// Quadratic splines with two interior knots (`d = 5`).
    fn default() -> Self {
        Self {
            degree: 2,
            interior_knots: 2,
        }
    }
}

impl SplineConfig {
    pub fn new(degree: usize, interior_knots: usize) -> Self {
        Self {
            degree,
            interior_knots,
        }
    }

    /// Number of basis functions `d = interior_knots + degree + 1`.
    pub fn basis_count(&self) -> usize {
        self.interior_knots + self.degree + 1
    }
}

/// Full clamped knot vector of length `d + degree + 1`.
pub fn knot_sequence(config: &SplineConfig) -> Vec<f64> {
    let o = config.degree;
    let nk = config.interior_knots;
    let mut knots = Vec::with_capacity(nk + 2 * (o + 1));
    knots.extend(std::iter::repeat_n(0.0, o + 1));
    knots.extend((1..=nk).map(|i| i as f64 / (nk + 1) as f64));
    knots.extend(std::iter::repeat_n(1.0, o + 1));
    knots
}

/// Precomputed knots for repeated evaluation.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    config: SplineConfig,
    knots: Vec<f64>,
}

impl SplineBasis {
    pub fn new(config: SplineConfig) -> Self {
        Self {
            knots: knot_sequence(&config),
            config,
        }
    }

    pub fn config(&self) -> SplineConfig {
        self.config
    }

    pub fn dim(&self) -> usize {
        self.config.basis_count()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Writes the `d` basis values at `v` into `out`.
    pub fn evaluate_into(&self, v: f64, out: &mut [f64]) -> Result<()> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("basis argument {v} outside [0,1]")));
        }
        let o = self.config.degree;
        let d = self.dim();
        debug_assert_eq!(out.len(), d);
        out.iter_mut().for_each(|x| *x = 0.0);
        let t = &self.knots;

        // Span index `mu` with t[mu] <= v < t[mu+1]; the last non-degenerate
        // span at v = 1.
        let mut mu = o;
        while mu < d - 1 && v >= t[mu + 1] {
            mu += 1;
        }

        // Triangular Cox–de Boor: nonzero functions B_{mu-o..=mu}.
        let mut n = vec![0.0; o + 1];
        let mut left = vec![0.0; o + 1];
        let mut right = vec![0.0; o + 1];
        n[0] = 1.0;
        for k in 1..=o {
            left[k] = v - t[mu + 1 - k];
            right[k] = t[mu + k] - v;
            let mut saved = 0.0;
            for r in 0..k {
                let denom = right[r + 1] + left[k - r];
                let temp = if denom > 0.0 { n[r] / denom } else { 0.0 };
                n[r] = saved + right[r + 1] * temp;
                saved = left[k - r] * temp;
            }
            n[k] = saved;
        }
        for (r, val) in n.into_iter().enumerate() {
            out[mu - o + r] = val;
        }
        Ok(())
    }

    pub fn evaluate(&self, v: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.evaluate_into(v, &mut out)?;
        Ok(out)
    }

    /// `len(points) × d` basis matrix.
    pub fn matrix(&self, points: &[f64]) -> Result<Matrix> {
        let d = self.dim();
        let mut m = Matrix::zeros(points.len(), d);
        for (i, &v) in points.iter().enumerate() {
            self.evaluate_into(v, m.row_mut(i))?;
        }
        Ok(m)
    }
}

/// One-shot evaluation of the basis at `v`.
pub fn evaluate_basis(v: f64, config: &SplineConfig) -> Result<Vec<f64>> {
    SplineBasis::new(*config).evaluate(v)
}

/// `count` equally spaced points from 0 to 1 inclusive.
pub fn uniform_grid(count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count).map(|t| t as f64 / (count - 1) as f64).collect(),
    }
}

/// Basis values at the observed index points and on an evaluation grid.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub values: Matrix,
    pub grid: Vec<f64>,
    pub grid_values: Matrix,
}

impl BasisMatrix {
    pub fn new(basis: &SplineBasis, v: &[f64], grid: Vec<f64>) -> Result<Self> {
        Ok(Self {
            values: basis.matrix(v)?,
            grid_values: basis.matrix(&grid)?,
            grid,
        })
    }
}

/// Grouped spline design: block `j` has rows `Z_ij = π(V_i) X_ij`, with
/// block 0 the varying intercept (`X_i0 = 1`).
#[derive(Debug, Clone)]
pub struct ExpandedDesign {
    pub config: SplineConfig,
    pub blocks: Vec<Matrix>,
}

impl ExpandedDesign {
    pub fn n(&self) -> usize {
        self.blocks[0].rows()
    }

    pub fn d(&self) -> usize {
        self.blocks[0].cols()
    }

    /// Number of selectable blocks (excludes the intercept).
    pub fn p(&self) -> usize {
        self.blocks.len() - 1
    }
}

pub fn expand_design(dataset: &Dataset, config: &SplineConfig) -> Result<ExpandedDesign> {
    let n = dataset.v.len();
    if dataset.x.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but V has {n} entries",
            dataset.x.rows()
        )));
    }
    let basis = SplineBasis::new(*config).matrix(&dataset.v)?;
    let d = basis.cols();
    let mut blocks = Vec::with_capacity(dataset.p() + 1);
    blocks.push(basis.clone());
    for j in 0..dataset.p() {
        blocks.push(Matrix::from_fn(n, d, |i, s| basis.get(i, s) * dataset.x.get(i, j)));
    }
    Ok(ExpandedDesign {
        config: *config,
        blocks,
    })
}
