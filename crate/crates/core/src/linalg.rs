//! Small dense symmetric positive-definite kernels.
//!
//! Matrices are row-major `k × k` slices. The samplers factor one `d × d`
//! precision per block per sweep, so everything here works in caller-owned
//! buffers and never allocates on the hot path.

use crate::{Error, Result};

/// Lower Cholesky factor `L` of an SPD matrix `A = L Lᵀ`, row-major, upper
/// triangle zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn new(matrix: &[f64], dim: usize) -> Result<Self> {
        let mut lower = matrix.to_vec();
        factor_in_place(&mut lower, dim)?;
        Ok(Self { dim, lower })
    }

    /// Factors in place, reusing `self`'s buffer.
    pub fn refactor(&mut self, matrix: &[f64], dim: usize) -> Result<()> {
        self.dim = dim;
        self.lower.clear();
        self.lower.extend_from_slice(matrix);
        factor_in_place(&mut self.lower, dim)
    }

    pub fn empty() -> Self {
        Self {
            dim: 0,
            lower: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// `log |A|`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.lower[i * self.dim + i].ln())
            .sum::<f64>()
            * 2.0
    }

    /// Overwrites `b` with `L⁻¹ b`.
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let k = self.dim;
        for i in 0..k {
            let row = &self.lower[i * k..i * k + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, x)| l * x).sum();
            b[i] = (b[i] - s) / self.lower[i * k + i];
        }
    }

    /// Overwrites `b` with `L⁻ᵀ b`.
    pub fn solve_upper_in_place(&self, b: &mut [f64]) {
        let k = self.dim;
        for i in (0..k).rev() {
            let mut s = 0.0;
            for r in i + 1..k {
                s += self.lower[r * k + i] * b[r];
            }
            b[i] = (b[i] - s) / self.lower[i * k + i];
        }
    }

    /// Overwrites `b` with `A⁻¹ b`.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    /// Writes `L z` into `out`.
    pub fn lower_mul(&self, z: &[f64], out: &mut [f64]) {
        let k = self.dim;
        for i in 0..k {
            out[i] = self.lower[i * k..i * k + i + 1]
                .iter()
                .zip(z)
                .map(|(l, x)| l * x)
                .sum();
        }
    }

    /// Dense `A⁻¹`, row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let k = self.dim;
        let mut inv = vec![0.0; k * k];
        let mut col = vec![0.0; k];
        for c in 0..k {
            col.iter_mut().for_each(|x| *x = 0.0);
            col[c] = 1.0;
            self.solve_in_place(&mut col);
            for r in 0..k {
                inv[r * k + c] = col[r];
            }
        }
        inv
    }
}

fn factor_in_place(a: &mut [f64], k: usize) -> Result<()> {
    if a.len() != k * k {
        return Err(Error::DimensionMismatch(format!(
            "expected {k}x{k} matrix, got {} entries",
            a.len()
        )));
    }
    for j in 0..k {
        let mut diag = a[j * k + j];
        for s in 0..j {
            diag -= a[j * k + s] * a[j * k + s];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = diag.sqrt();
        a[j * k + j] = ljj;
        for i in j + 1..k {
            let mut v = a[i * k + j];
            for s in 0..j {
                v -= a[i * k + s] * a[j * k + s];
            }
            a[i * k + j] = v / ljj;
        }
        for c in j + 1..k {
            a[j * k + c] = 0.0;
        }
    }
    Ok(())
}

/// `true` when `m` is square and symmetric to relative tolerance `1e-10`.
pub fn is_symmetric(m: &[f64], k: usize) -> bool {
    if m.len() != k * k {
        return false;
    }
    (0..k).all(|i| {
        (0..i).all(|j| {
            let (a, b) = (m[i * k + j], m[j * k + i]);
            (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
        })
    })
}

pub fn identity(k: usize, scale: f64) -> Vec<f64> {
    let mut m = vec![0.0; k * k];
    for i in 0..k {
        m[i * k + i] = scale;
    }
    m
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spd3() -> Vec<f64> {
        vec![4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]
    }

    #[test]
    fn factor_reconstructs_matrix() {
        let a = spd3();
        let c = Cholesky::new(&a, 3).unwrap();
        let l = c.lower();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|s| l[i * 3 + s] * l[j * 3 + s]).sum();
                assert_relative_eq!(v, a[i * 3 + j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn solve_and_inverse_agree_with_nalgebra() {
        let a = spd3();
        let c = Cholesky::new(&a, 3).unwrap();
        let na = nalgebra::DMatrix::from_row_slice(3, 3, &a);
        let inv = na.clone().try_inverse().unwrap();
        let ours = c.inverse();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(ours[i * 3 + j], inv[(i, j)], epsilon = 1e-13);
            }
        }
        assert_relative_eq!(c.log_det(), na.determinant().ln(), epsilon = 1e-13);
        let mut b = vec![1.0, -2.0, 0.5];
        c.solve_in_place(&mut b);
        let x = inv * nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5]);
        for i in 0..3 {
            assert_relative_eq!(b[i], x[i], epsilon = 1e-13);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            Cholesky::new(&a, 2),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        assert!(Cholesky::new(&[0.0], 1).is_err());
        assert!(Cholesky::new(&[1.0, 0.0], 2).is_err());
    }

    #[test]
    fn symmetry_check() {
        assert!(is_symmetric(&spd3(), 3));
        assert!(!is_symmetric(&[1.0, 0.3, 0.2, 1.0], 2));
    }
}
