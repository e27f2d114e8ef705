//! Seeded random inputs shared by tests, the acceptance suite and benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::covariance::NoiseCovariance;
use crate::grid::Grid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random orthogonal matrix (QR of a Gaussian matrix, sign-fixed).
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col *= -1.0;
        }
    }
    q
}

/// SPD matrix `U diag(λ) Uᵀ` with eigenvalues log-spaced at random in
/// `[1, condition]`; the extremes are always present when `n >= 2`.
pub fn random_spd_matrix<R: Rng>(n: usize, condition: f64, rng: &mut R) -> DMatrix<f64> {
    let u = random_orthogonal(n, rng);
    let log_c = condition.ln();
    let eig: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => condition,
            _ => (rng.random::<f64>() * log_c).exp(),
        })
        .collect();
    let m = &u * DMatrix::from_diagonal(&DVector::from_vec(eig)) * u.transpose();
    // Exact symmetry.
    (&m + m.transpose()) * 0.5
}

pub fn random_spd(n: usize, condition: f64, seed: u64) -> NoiseCovariance {
    let mut r = rng(seed);
    NoiseCovariance::new(random_spd_matrix(n, condition, &mut r)).expect("random SPD is valid")
}

/// Grid of `n` points starting at 0 with consecutive gaps uniform in `[1, ratio]`.
pub fn random_grid<R: Rng>(n: usize, ratio: f64, rng: &mut R) -> Grid {
    let mut x = Vec::with_capacity(n);
    let mut at = 0.0;
    for i in 0..n {
        if i > 0 {
            at += 1.0 + rng.random::<f64>() * (ratio - 1.0);
        }
        x.push(at);
    }
    Grid::new(x).expect("gaps are positive")
}

/// Random matrix shifted towards the identity so it is comfortably invertible.
pub fn random_invertible<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| (rng.random::<f64>() - 0.5) * 2.0 / n as f64);
    g + DMatrix::identity(n, n) * 2.0
}
