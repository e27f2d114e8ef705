//! Minimum-variance linear approximants for noisy samples.
//!
//! Given samples `f = G|ₓ + e` on a grid `x`, where the noise `e` has zero
//! mean and a positive-definite covariance `Ω̂`, this crate computes the
//! coefficients `a` of the rule `Σ aᵢ fᵢ ≈ G(t0)` that reproduces
//! polynomials up to a prescribed degree and has the smallest possible
//! noise variance `aᵀ Ω̂ a`.
//!
//! ```
//! use mvapprox::{make_setting, solve_all_routes, Grid, NoiseCovariance};
//!
//! let grid = Grid::integers(-7, 16).unwrap();
//! let setting = make_setting(grid, 0.25, 2, false).unwrap();
//! let report = solve_all_routes(&setting, &NoiseCovariance::identity(16)).unwrap();
//! let sum: f64 = report.coefficients().iter().sum();
//! assert!((sum - 1.0).abs() < 1e-12);
//! ```

// Negated comparisons are used deliberately so that NaN takes the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annihilation;
pub mod approximant;
pub mod covariance;
pub mod error;
pub mod experiments;
pub mod fixtures;
pub mod grid;
pub mod orthopoly;
pub mod poly;
pub mod solver;
pub mod subdivision;

pub use annihilation::{build_annihilator, AnnihilationOperator};
pub use approximant::{reproduction_residual, Approximant};
pub use covariance::{variance_of, NoiseCovariance};
pub use error::{Error, Result};
pub use grid::{make_setting, Grid, StencilSetting};
pub use orthopoly::{build_q, gram_schmidt, inner_product, OrthonormalPolyBasis};
pub use poly::{NewtonBasis, PolySample};
pub use solver::{
    build_a0, kernel_check, solve_all_routes, solve_annihilation, solve_orthopoly,
    solve_small_system, variance_lower_bound, Route, SolveReport,
};
