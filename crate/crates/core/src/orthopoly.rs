//! Polynomials orthonormal under `(P, Q) = P|ₓᵀ Ω̂⁻¹ Q|ₓ`.
//!
//! Orthogonalization runs in whitened coordinates `w = Ω⁻ᵀ P|ₓ`, where the
//! inner product becomes the Euclidean one. Newton coefficients are carried
//! along so each basis polynomial can be evaluated off the grid.

use nalgebra::DVector;

use crate::covariance::NoiseCovariance;
use crate::error::{Error, Result};
use crate::grid::{Grid, StencilSetting};
use crate::poly::{NewtonBasis, PolySample};

pub const ORTHO_TOL: f64 = 1e-10;

/// Relative norm below which a new direction counts as dependent.
pub const BREAKDOWN_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
pub struct OrthonormalPolyBasis {
    grid: Grid,
    polys: Vec<PolySample>,
    gram_residual: f64,
}

impl OrthonormalPolyBasis {
    /// `P⁰ … P^{d-1}`.
    pub fn polys(&self) -> &[PolySample] {
        &self.polys
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// `max |(Pⁱ, Pʲ) - δᵢⱼ|`.
    pub fn gram_residual(&self) -> f64 {
        self.gram_residual
    }
}

pub fn inner_product(p: &PolySample, q: &PolySample, cov: &NoiseCovariance) -> Result<f64> {
    if p.values().len() != q.values().len() {
        return Err(Error::DimensionMismatch {
            expected: p.values().len(),
            found: q.values().len(),
        });
    }
    Ok(p.values().dot(&cov.solve(q.values())?))
}

/// Modified Gram–Schmidt with one re-orthogonalization pass over the
/// Leja-ordered Newton basis anchored at `t0`.
pub fn gram_schmidt(
    setting: &StencilSetting,
    cov: &NoiseCovariance,
) -> Result<OrthonormalPolyBasis> {
    let grid = setting.grid();
    let d = setting.degree();
    let n = grid.len();
    if cov.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cov.dim(),
        });
    }
    let basis = NewtonBasis::leja(grid, setting.t0(), d);

    let mut q_vecs: Vec<DVector<f64>> = Vec::with_capacity(d);
    let mut q_coeffs: Vec<DVector<f64>> = Vec::with_capacity(d);
    for s in 0..d {
        let start = DVector::from_iterator(n, grid.points().iter().map(|&x| basis.eval_all(x)[s]));
        let mut v = cov.whiten(&start)?;
        let mut coef = DVector::<f64>::zeros(d);
        coef[s] = 1.0;
        let original = v.norm();
        for _pass in 0..2 {
            for (qk, ck) in q_vecs.iter().zip(&q_coeffs) {
                let r = qk.dot(&v);
                v.axpy(-r, qk, 1.0);
                coef.axpy(-r, ck, 1.0);
            }
        }
        let norm = v.norm();
        if !(norm > BREAKDOWN_TOL * original) {
            return Err(Error::GramSchmidtBreakdown {
                degree: s,
                relative_norm: if original > 0.0 { norm / original } else { 0.0 },
            });
        }
        q_vecs.push(v / norm);
        q_coeffs.push(coef / norm);
    }

    let polys = q_coeffs
        .iter()
        .map(|c| PolySample::new(grid, basis.clone(), c.iter().copied().collect()))
        .collect::<Result<Vec<_>>>()?;

    let mut gram_residual = 0.0f64;
    let whitened = polys
        .iter()
        .map(|p| cov.whiten(p.values()))
        .collect::<Result<Vec<_>>>()?;
    for i in 0..d {
        for j in 0..=i {
            let g = whitened[i].dot(&whitened[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((g - target).abs());
        }
    }

    Ok(OrthonormalPolyBasis {
        grid: grid.clone(),
        polys,
        gram_residual,
    })
}

/// `Q = Σⱼ Pʲ(t0) Pʲ`, sampled on the basis grid.
pub fn build_q(basis: &OrthonormalPolyBasis, t0: f64) -> Result<PolySample> {
    let Some(first) = basis.polys.first() else {
        return Err(Error::DegreeOutOfRange {
            degree: 0,
            min: 1,
            max: usize::MAX,
        });
    };
    let mut coeffs = vec![0.0; basis.len()];
    for p in &basis.polys {
        let w = p.eval(t0);
        for (c, pc) in coeffs.iter_mut().zip(p.coeffs()) {
            *c += w * pc;
        }
    }
    PolySample::new(&basis.grid, first.basis().clone(), coeffs)
}
