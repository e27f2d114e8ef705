//! Noise covariance matrices and their Cholesky factors.
//!
//! A covariance `Ω̂` is stored together with the upper-triangular factor `Ω`
//! satisfying `Ω̂ = ΩᵀΩ`, so that the variance of `aᵀE` is `‖Ωa‖²`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot threshold (against the largest diagonal entry) for accepting
/// a matrix as positive definite.
pub const PIVOT_TOL: f64 = 1e-12;

/// Relative asymmetry threshold (against the largest entry magnitude).
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric positive-definite noise covariance with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovariance {
    omega_hat: DMatrix<f64>,
    /// Upper triangular, `omega_hat = factorᵀ factor`.
    factor: DMatrix<f64>,
}

impl NoiseCovariance {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.ncols(),
            });
        }
        if n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "covariance" });
        }
        let scale = matrix.amax();
        let mut asymmetry = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                asymmetry = asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs());
            }
        }
        if asymmetry > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric { asymmetry });
        }
        // Mirror the upper triangle so the stored matrix is exactly symmetric.
        let mut omega_hat = matrix;
        for i in 0..n {
            for j in (i + 1)..n {
                omega_hat[(j, i)] = omega_hat[(i, j)];
            }
        }
        let max_diag = (0..n).map(|i| omega_hat[(i, i)]).fold(0.0, f64::max);
        let lower = cholesky_lower(&omega_hat, PIVOT_TOL * max_diag)?;
        Ok(Self {
            omega_hat,
            factor: lower.transpose(),
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            omega_hat: DMatrix::identity(n, n),
            factor: DMatrix::identity(n, n),
        }
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(entries)))
    }

    /// Build from a row-major list of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn dim(&self) -> usize {
        self.omega_hat.nrows()
    }

    /// The covariance matrix `Ω̂`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.omega_hat
    }

    /// The upper-triangular factor `Ω`.
    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    /// `λ Ω̂` for `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(&self.omega_hat * lambda)
    }

    /// Principal submatrix at `indices` (indices may repeat order arbitrarily
    /// but must be distinct).
    pub fn principal_submatrix(&self, indices: &[usize]) -> Result<Self> {
        let k = indices.len();
        Self::new(DMatrix::from_fn(k, k, |i, j| {
            self.omega_hat[(indices[i], indices[j])]
        }))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: len,
            });
        }
        Ok(())
    }

    /// `Ω̂ v`.
    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v.len())?;
        Ok(&self.omega_hat * v)
    }

    /// `Ω̂⁻¹ v` through two triangular solves with the stored factor.
    pub fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let w = self.whiten(v)?;
        Ok(self
            .factor
            .solve_upper_triangular(&w)
            .expect("factor has a nonzero diagonal"))
    }

    /// `Ω̂⁻¹ V` column by column.
    pub fn solve_matrix(&self, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_len(v.nrows())?;
        let w = self
            .factor
            .tr_solve_upper_triangular(v)
            .expect("factor has a nonzero diagonal");
        Ok(self
            .factor
            .solve_upper_triangular(&w)
            .expect("factor has a nonzero diagonal"))
    }

    /// `Ω⁻ᵀ v`, so that `uᵀ Ω̂⁻¹ v = whiten(u) · whiten(v)`.
    pub fn whiten(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(v.len())?;
        Ok(self
            .factor
            .tr_solve_upper_triangular(v)
            .expect("factor has a nonzero diagonal"))
    }

    /// `Ωᵀ z`; maps white noise to noise with covariance `Ω̂`.
    pub fn color(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(z.len())?;
        Ok(self.factor.tr_mul(z))
    }
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`; every pivot must exceed `min_pivot`.
fn cholesky_lower(a: &DMatrix<f64>, min_pivot: f64) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > min_pivot) || pivot <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// `aᵀ Ω̂ a = ‖Ω a‖²`.
pub fn variance_of(a: &DVector<f64>, cov: &NoiseCovariance) -> Result<f64> {
    cov.check_len(a.len())?;
    Ok((cov.factor() * a).norm_squared())
}
