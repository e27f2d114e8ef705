//! Annihilation operators for sampled polynomial spaces.
//!
//! Row `j` of the operator of order `d` holds the `d`-th divided-difference
//! weights on the window `x_j..x_{j+d}`, rescaled so its largest entry has
//! magnitude one. The kernel is exactly the space of degree `< d`
//! polynomials sampled on the grid.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::poly::PolySample;

pub const KERNEL_TOL: f64 = 1e-10;
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnihilationOperator {
    matrix: DMatrix<f64>,
    grid: Grid,
    degree: usize,
}

impl AnnihilationOperator {
    /// `(N - d) × N` matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.ncols(),
                found: v.len(),
            });
        }
        Ok(&self.matrix * v)
    }

    /// `T ∇` for an invertible `(N-d) × (N-d)` matrix `T`; the kernel is unchanged.
    pub fn left_multiplied(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.nrows() != self.rows() || t.ncols() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: t.nrows(),
            });
        }
        let op = Self {
            matrix: t * &self.matrix,
            grid: self.grid.clone(),
            degree: self.degree,
        };
        if !op.has_full_row_rank() {
            return Err(Error::SingularSystem("transformed operator lost rank"));
        }
        Ok(op)
    }

    /// Smallest singular value above `RANK_TOL` times the largest.
    pub fn has_full_row_rank(&self) -> bool {
        if self.rows() == 0 {
            return true;
        }
        let sv = self.matrix.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        max > 0.0 && min > RANK_TOL * max
    }

    /// `‖∇ P|ₓ‖∞ / max(1, ‖P|ₓ‖∞)`.
    pub fn kernel_residual(&self, p: &PolySample) -> Result<f64> {
        let r = self.apply(p.values())?;
        Ok(r.amax() / p.values().amax().max(1.0))
    }
}

/// Banded divided-difference annihilator of order `d` on `grid` (`0 <= d < N`).
pub fn build_annihilator(grid: &Grid, degree: usize) -> Result<AnnihilationOperator> {
    let n = grid.len();
    if degree >= n {
        return Err(Error::DegreeOutOfRange {
            degree,
            min: 0,
            max: n.saturating_sub(1),
        });
    }
    build_banded(grid, degree)
}

/// Same construction, but `d = N` is allowed and gives an empty operator.
pub(crate) fn build_banded(grid: &Grid, degree: usize) -> Result<AnnihilationOperator> {
    let n = grid.len();
    let x = grid.points();
    let rows = n - degree;
    let mut matrix = DMatrix::<f64>::zeros(rows, n);
    for j in 0..rows {
        let window = &x[j..=j + degree];
        let mut weights: Vec<f64> = (0..=degree)
            .map(|k| {
                let denom: f64 = (0..=degree)
                    .filter(|&m| m != k)
                    .map(|m| window[k] - window[m])
                    .product();
                1.0 / denom
            })
            .collect();
        let peak = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        for w in &mut weights {
            *w /= peak;
        }
        for (k, w) in weights.into_iter().enumerate() {
            matrix[(j, j + k)] = w;
        }
    }
    Ok(AnnihilationOperator {
        matrix,
        grid: grid.clone(),
        degree,
    })
}

/// `‖∇ v‖∞ / max(1, ‖v‖∞)` for a raw vector.
pub(crate) fn relative_kernel_residual(op: &AnnihilationOperator, v: &DVector<f64>) -> Result<f64> {
    let r = op.apply(v)?;
    Ok(if r.is_empty() {
        0.0
    } else {
        r.amax() / v.amax().max(1.0)
    })
}
