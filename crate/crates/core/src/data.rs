//! Dataset container and a minimal row-major matrix.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Observed data for one fit.
///
/// `x` holds the `p` selectable predictors only; the leading all-ones column
/// of the model is implicit and carried by the varying intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// Index variable, each entry in `[0, 1]`.
    pub v: Vec<f64>,
    /// `n × p` predictors.
    pub x: Matrix,
    /// `n × q` clinical covariates, not subject to selection (`q` may be 0).
    pub e: Matrix,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(v: Vec<f64>, x: Matrix, e: Matrix, y: Vec<f64>) -> Result<Self> {
        let ds = Self { v, x, e, y };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn q(&self) -> usize {
        self.e.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.y.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("dataset has no observations".into()));
        }
        if self.v.len() != n || self.x.rows() != n || self.e.rows() != n {
            return Err(Error::DimensionMismatch(format!(
                "n = {n} responses but V has {}, X has {} and E has {} rows",
                self.v.len(),
                self.x.rows(),
                self.e.rows()
            )));
        }
        if let Some(bad) = self.v.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("index variable {bad} outside [0,1]")));
        }
        let finite = self.y.iter().all(|v| v.is_finite())
            && self.x.as_slice().iter().all(|v| v.is_finite())
            && self.e.as_slice().iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(())
    }
}
