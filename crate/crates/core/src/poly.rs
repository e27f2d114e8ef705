//! Polynomials in a scaled Newton basis and their samples on a grid.
//!
//! The basis functions are `B_0 = 1` and
//! `B_j(x) = Π_{k<j} (x - c_k) / h`, where `c_0 = t0` and `h` is the distance
//! from `t0` to the farthest grid point. Monomials on wide grids are badly
//! conditioned; this basis is not.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonBasis {
    centers: Vec<f64>,
    scale: f64,
    len: usize,
}

impl NewtonBasis {
    /// Basis of `len` functions with explicit centers (`centers.len() >= len - 1`).
    pub fn new(centers: Vec<f64>, scale: f64, len: usize) -> Self {
        assert!(len == 0 || centers.len() + 1 >= len, "not enough centers");
        assert!(scale > 0.0 && scale.is_finite(), "scale must be positive");
        Self {
            centers,
            scale,
            len,
        }
    }

    /// Centers `t0`, then grid points in Leja order (each new center maximizes
    /// the product of distances to the previous ones).
    pub fn leja(grid: &Grid, t0: f64, len: usize) -> Self {
        let pts = grid.points();
        let scale = pts.iter().map(|x| (x - t0).abs()).fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let mut centers = vec![t0];
        let mut used = vec![false; pts.len()];
        while centers.len() + 1 < len {
            let mut best = None;
            let mut best_val = -1.0;
            for (i, &x) in pts.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let v: f64 = centers.iter().map(|c| ((x - c) / scale).abs()).product();
                if v > best_val {
                    best_val = v;
                    best = Some(i);
                }
            }
            let Some(i) = best else { break };
            used[i] = true;
            centers.push(pts[i]);
        }
        // More functions than distinct nodes: repeat t0 (still a valid basis).
        while centers.len() + 1 < len {
            centers.push(t0);
        }
        Self::new(centers, scale, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers[..self.len.saturating_sub(1)]
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Values of all basis functions at `x`.
    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len);
        let mut b = 1.0;
        for j in 0..self.len {
            out.push(b);
            if j + 1 < self.len {
                b *= (x - self.centers[j]) / self.scale;
            }
        }
        out
    }

    /// Evaluate `Σ coeffs[j] B_j(x)` by nested multiplication.
    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        let m = coeffs.len().min(self.len);
        if m == 0 {
            return 0.0;
        }
        let mut p = coeffs[m - 1];
        for j in (0..m - 1).rev() {
            p = coeffs[j] + (x - self.centers[j]) / self.scale * p;
        }
        p
    }

    /// Monomial coefficients (in powers of `x`, lowest first) of a Newton-form polynomial.
    pub fn to_monomial(&self, coeffs: &[f64]) -> Vec<f64> {
        let m = coeffs.len().min(self.len);
        let mut out = vec![0.0; m.max(1)];
        if m == 0 {
            return out;
        }
        // Horner in polynomial arithmetic: p <- c_j + p * (x - c_j) / h.
        let mut p = vec![coeffs[m - 1]];
        for j in (0..m - 1).rev() {
            let c = self.centers[j];
            let mut next = vec![0.0; p.len() + 1];
            for (k, &pk) in p.iter().enumerate() {
                next[k + 1] += pk / self.scale;
                next[k] -= pk * c / self.scale;
            }
            next[0] += coeffs[j];
            p = next;
        }
        out[..p.len()].copy_from_slice(&p);
        out
    }

    /// Newton coefficients of a polynomial given by monomial coefficients.
    /// The polynomial degree must be below `len`.
    #[allow(clippy::needless_range_loop)]
    pub fn from_monomial(&self, monomial: &[f64]) -> Vec<f64> {
        let mut p = monomial.to_vec();
        while p.len() > 1 && p[p.len() - 1] == 0.0 {
            p.pop();
        }
        assert!(p.len() <= self.len.max(1), "degree exceeds basis size");
        let mut out = vec![0.0; self.len];
        for j in 0..self.len {
            if p.is_empty() {
                break;
            }
            if j + 1 == self.len || p.len() == 1 {
                out[j] = p[0];
                break;
            }
            // p(x) = p(c) + (x - c) q(x): synthetic division by (x - c).
            let c = self.centers[j];
            let deg = p.len() - 1;
            let mut q = vec![0.0; deg];
            let mut acc = 0.0;
            for k in (0..=deg).rev() {
                acc = acc * c + p[k];
                if k > 0 {
                    q[k - 1] = acc;
                }
            }
            out[j] = acc;
            p = q.into_iter().map(|v| v * self.scale).collect();
        }
        out
    }
}

/// A polynomial together with its values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolySample {
    values: DVector<f64>,
    basis: NewtonBasis,
    coeffs: Vec<f64>,
}

impl PolySample {
    pub fn new(grid: &Grid, basis: NewtonBasis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() > basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                found: coeffs.len(),
            });
        }
        let values = DVector::from_iterator(
            grid.len(),
            grid.points().iter().map(|&x| basis.eval(&coeffs, x)),
        );
        Ok(Self {
            values,
            basis,
            coeffs,
        })
    }

    /// Sample of a polynomial given in monomial coefficients, stored in the
    /// Leja-ordered Newton basis anchored at `t0`.
    pub fn from_monomial(grid: &Grid, t0: f64, monomial: &[f64]) -> Result<Self> {
        let basis = NewtonBasis::leja(grid, t0, monomial.len().max(1));
        let coeffs = basis.from_monomial(monomial);
        Self::new(grid, basis, coeffs)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn basis(&self) -> &NewtonBasis {
        &self.basis
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.basis.eval(&self.coeffs, x)
    }

    /// Index of the highest nonzero Newton coefficient (relative to `rel_tol`
    /// times the coefficient norm).
    pub fn degree(&self, rel_tol: f64) -> Option<usize> {
        let norm = self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        self.coeffs
            .iter()
            .rposition(|c| c.abs() > rel_tol * norm && *c != 0.0)
    }
}
