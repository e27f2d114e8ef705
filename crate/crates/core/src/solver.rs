//! Minimum-variance approximants.
//!
//! The coefficient vector `a*` minimizes `aᵀ Ω̂ a` subject to reproducing
//! polynomials of degree `< d` at `t0`. It is computed along three
//! independent routes:
//!
//! * [`Route::AnnihilationSolve`]: parametrize the feasible set as
//!   `a⁰ + ∇ᵀβ` and solve the `(N-d)`-square SPD system
//!   `(∇ Ω̂ ∇ᵀ) β = -∇ Ω̂ a⁰` (as a least-squares problem in `Ω∇ᵀ`).
//! * [`Route::SmallSystem`]: find `Q` of degree `< d` such that `Ω̂⁻¹ Q|ₓ`
//!   satisfies the `d` moment conditions.
//! * [`Route::OrthoPoly`]: `a = Ω̂⁻¹ Q|ₓ` with `Q = Σ Pʲ(t0) Pʲ` for the
//!   `Ω̂⁻¹`-orthonormal polynomials `Pʲ`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::annihilation::{build_banded, relative_kernel_residual, AnnihilationOperator};
use crate::approximant::{reproduction_residual, Approximant};
use crate::covariance::NoiseCovariance;
use crate::error::{Error, Result};
use crate::grid::StencilSetting;
use crate::orthopoly::{build_q, gram_schmidt};
use crate::poly::{NewtonBasis, PolySample};

/// Relative (to `‖a‖∞`) tolerance for agreement between routes.
pub const CROSS_ROUTE_TOL: f64 = 1e-6;

/// Condition estimate above which an annihilation solve is flagged.
pub const ILL_CONDITIONED_THRESHOLD: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    AnnihilationSolve,
    SmallSystem,
    OrthoPoly,
}

/// How the feasible starting point `a⁰` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum A0Construction {
    /// Lagrange weights on the `d` nodes nearest to `t0` (ties to lower index).
    #[default]
    NearestPoints,
    /// Lagrange weights on the first `d` nodes.
    FirstPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    pub reproduction: f64,
    /// `‖∇ Ω̂ a‖∞ / max(1, ‖Ω̂ a‖∞)`.
    pub kernel: f64,
    pub cross_route: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub approximant: Approximant,
    pub route: Route,
    pub residuals: Residuals,
    /// Condition estimate of the linear system the route solved.
    pub condition_estimate: f64,
    pub ill_conditioned: bool,
    /// The polynomial `Q` with `Ω̂ a = Q|ₓ`, for the polynomial routes.
    pub polynomial: Option<PolySample>,
}

impl SolveReport {
    pub fn coefficients(&self) -> &DVector<f64> {
        self.approximant.coefficients()
    }

    pub fn variance(&self) -> f64 {
        self.approximant.variance()
    }
}

fn check_cov(setting: &StencilSetting, cov: &NoiseCovariance) -> Result<()> {
    if cov.dim() != setting.len() {
        return Err(Error::DimensionMismatch {
            expected: setting.len(),
            found: cov.dim(),
        });
    }
    Ok(())
}

fn require_constraints(setting: &StencilSetting) -> Result<()> {
    if setting.degree() == 0 {
        return Err(Error::DegreeOutOfRange {
            degree: 0,
            min: 1,
            max: setting.len(),
        });
    }
    Ok(())
}

/// Lagrange weights at `t0` for the nodes `xs`.
fn lagrange_weights(xs: &[f64], t0: f64) -> Vec<f64> {
    (0..xs.len())
        .map(|k| {
            xs.iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, &xm)| (t0 - xm) / (xs[k] - xm))
                .product()
        })
        .collect()
}

/// A feasible coefficient vector: interpolation weights at the `d` nodes
/// nearest to `t0`, zero elsewhere. For `d = 0` this is the zero vector.
pub fn build_a0(setting: &StencilSetting) -> DVector<f64> {
    build_a0_with(setting, A0Construction::NearestPoints)
}

pub fn build_a0_with(setting: &StencilSetting, how: A0Construction) -> DVector<f64> {
    let xs = setting.grid().points();
    let t0 = setting.t0();
    let d = setting.degree();
    let mut chosen: Vec<usize> = match how {
        A0Construction::FirstPoints => (0..d).collect(),
        A0Construction::NearestPoints => {
            let mut idx: Vec<usize> = (0..xs.len()).collect();
            // Stable sort keeps lower indices first on ties.
            idx.sort_by(|&i, &j| (xs[i] - t0).abs().total_cmp(&(xs[j] - t0).abs()));
            idx.truncate(d);
            idx
        }
    };
    chosen.sort_unstable();
    let nodes: Vec<f64> = chosen.iter().map(|&i| xs[i]).collect();
    let mut a0 = DVector::zeros(xs.len());
    for (&i, w) in chosen.iter().zip(lagrange_weights(&nodes, t0)) {
        a0[i] = w;
    }
    a0
}

fn kernel_residual_of(
    setting: &StencilSetting,
    cov: &NoiseCovariance,
    a: &DVector<f64>,
) -> Result<f64> {
    let op = build_banded(setting.grid(), setting.degree())?;
    kernel_check(a, cov, &op)
}

fn finish(
    setting: &StencilSetting,
    cov: &NoiseCovariance,
    a: DVector<f64>,
    route: Route,
    condition_estimate: f64,
    kernel: f64,
    polynomial: Option<PolySample>,
) -> Result<SolveReport> {
    let reproduction = reproduction_residual(&a, setting);
    let approximant = Approximant::new(a, setting.clone(), cov)?;
    Ok(SolveReport {
        approximant,
        route,
        residuals: Residuals {
            reproduction,
            kernel,
            cross_route: None,
        },
        condition_estimate,
        ill_conditioned: !(condition_estimate <= ILL_CONDITIONED_THRESHOLD),
        polynomial,
    })
}

/// Canonical route: `a* = a⁰ + ∇ᵀβ*` with `(∇ Ω̂ ∇ᵀ) β* = -∇ Ω̂ a⁰`.
///
/// For `d = 0` the feasible set is all of `Rᴺ` and the result is `a* = 0`.
pub fn solve_annihilation(setting: &StencilSetting, cov: &NoiseCovariance) -> Result<SolveReport> {
    check_cov(setting, cov)?;
    let op = build_banded(setting.grid(), setting.degree())?;
    let a0 = build_a0(setting);
    solve_annihilation_with(setting, cov, &op, &a0)
}

/// Annihilation route with a caller-supplied operator and starting point.
/// `a0` must be feasible and `op` must annihilate exactly the reproduced space.
pub fn solve_annihilation_with(
    setting: &StencilSetting,
    cov: &NoiseCovariance,
    op: &AnnihilationOperator,
    a0: &DVector<f64>,
) -> Result<SolveReport> {
    check_cov(setting, cov)?;
    let n = setting.len();
    if a0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a0.len(),
        });
    }
    if op.matrix().ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: op.matrix().ncols(),
        });
    }
    let nabla = op.matrix();
    let (a, condition) = if nabla.nrows() == 0 {
        (a0.clone(), 1.0)
    } else {
        // Least-squares form of the same system: with B = Ω∇ᵀ the normal
        // equations are (BᵀB) β = -Bᵀ Ω a⁰, solved by QR of B so the
        // conditioning of ∇Ω̂∇ᵀ is not squared.
        let b = cov.factor() * nabla.transpose();
        let sv = b.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if !(smin > f64::EPSILON * b.nrows() as f64 * smax) {
            return Err(Error::SingularSystem(
                "annihilated covariance is numerically singular",
            ));
        }
        let condition = (smax / smin).powi(2);
        let c = cov.factor() * a0;
        let qr = b.qr();
        let rhs = -(qr.q().transpose() * c);
        let beta = qr
            .r()
            .solve_upper_triangular(&rhs)
            .ok_or(Error::SingularSystem("zero pivot"))?;
        (a0 + nabla.transpose() * beta, condition)
    };
    let kernel = kernel_check(&a, cov, op)?;
    finish(
        setting,
        cov,
        a,
        Route::AnnihilationSolve,
        condition,
        kernel,
        None,
    )
}

/// Sampled Newton basis `V` (`N × d`) and its values at `t0`.
fn newton_design(setting: &StencilSetting) -> (NewtonBasis, DMatrix<f64>, DVector<f64>) {
    let d = setting.degree();
    let grid = setting.grid();
    let basis = NewtonBasis::leja(grid, setting.t0(), d);
    let mut v = DMatrix::zeros(grid.len(), d);
    for (i, &x) in grid.points().iter().enumerate() {
        for (j, b) in basis.eval_all(x).into_iter().enumerate() {
            v[(i, j)] = b;
        }
    }
    let at_t0 = DVector::from_vec(basis.eval_all(setting.t0()));
    (basis, v, at_t0)
}

/// `d × d` route: solve for the Newton coefficients of `Q` such that
/// `a = Ω̂⁻¹ Q|ₓ` reproduces every basis polynomial at `t0`.
///
/// The moment conditions are imposed on the Newton basis rather than on raw
/// monomials; both span the same space, so the solution is the same.
pub fn solve_small_system(setting: &StencilSetting, cov: &NoiseCovariance) -> Result<SolveReport> {
    check_cov(setting, cov)?;
    require_constraints(setting)?;
    let (basis, v, rhs) = newton_design(setting);
    let w = cov.solve_matrix(&v)?;
    let m = v.transpose() * &w;
    let lu = m.clone().full_piv_lu();
    if !lu.is_invertible() {
        return Err(Error::SingularSystem("moment system"));
    }
    let c = lu
        .solve(&rhs)
        .ok_or(Error::SingularSystem("moment system"))?;
    let a = &w * &c;
    let condition = {
        let sv = m.singular_values();
        sv.max() / sv.min()
    };
    let q = PolySample::new(setting.grid(), basis, c.iter().copied().collect())?;
    let kernel = kernel_residual_of(setting, cov, &a)?;
    finish(
        setting,
        cov,
        a,
        Route::SmallSystem,
        condition,
        kernel,
        Some(q),
    )
}

/// Orthonormal-polynomial route.
pub fn solve_orthopoly(setting: &StencilSetting, cov: &NoiseCovariance) -> Result<SolveReport> {
    check_cov(setting, cov)?;
    require_constraints(setting)?;
    let basis = gram_schmidt(setting, cov)?;
    let q = build_q(&basis, setting.t0())?;
    let a = cov.solve(q.values())?;
    let kernel = kernel_residual_of(setting, cov, &a)?;
    let condition = 1.0 + basis.gram_residual();
    finish(
        setting,
        cov,
        a,
        Route::OrthoPoly,
        condition,
        kernel,
        Some(q),
    )
}

/// Run every route, check that they agree, and return the annihilation
/// result with the maximum pairwise deviation recorded.
pub fn solve_all_routes(setting: &StencilSetting, cov: &NoiseCovariance) -> Result<SolveReport> {
    require_constraints(setting)?;
    let mut canonical = solve_annihilation(setting, cov)?;
    let small = solve_small_system(setting, cov)?;
    let ortho = solve_orthopoly(setting, cov)?;
    let routes = [
        canonical.coefficients(),
        small.coefficients(),
        ortho.coefficients(),
    ];
    let mut deviation = 0.0f64;
    for i in 0..routes.len() {
        for j in (i + 1)..routes.len() {
            deviation = deviation.max((routes[i] - routes[j]).amax());
        }
    }
    let tolerance = CROSS_ROUTE_TOL * canonical.coefficients().amax();
    if !(deviation <= tolerance) {
        return Err(Error::RouteDisagreement {
            deviation,
            tolerance,
        });
    }
    canonical.residuals.cross_route = Some(deviation);
    canonical.polynomial = small.polynomial;
    Ok(canonical)
}

/// `‖∇ Ω̂ a‖∞ / max(1, ‖Ω̂ a‖∞)`; vanishes exactly when a feasible `a` is
/// the minimum-variance approximant.
pub fn kernel_check(
    a: &DVector<f64>,
    cov: &NoiseCovariance,
    op: &AnnihilationOperator,
) -> Result<f64> {
    let omega_a = cov.apply(a)?;
    relative_kernel_residual(op, &omega_a)
}

/// `(1ᵀ Ω̂⁻¹ 1)⁻¹`, the smallest variance of any rule reproducing constants.
pub fn variance_lower_bound(cov: &NoiseCovariance) -> f64 {
    let ones = DVector::from_element(cov.dim(), 1.0);
    let w = cov.whiten(&ones).expect("dimension matches");
    1.0 / w.norm_squared()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annihilation::build_annihilator;
    use crate::fixtures::{random_spd, rng};
    use crate::grid::{make_setting, Grid};

    fn setting(points: Vec<f64>, t0: f64, d: usize) -> StencilSetting {
        make_setting(Grid::new(points).unwrap(), t0, d, false).unwrap()
    }

    fn grid16_setting(t0: f64, d: usize) -> StencilSetting {
        make_setting(Grid::integers(-7, 16).unwrap(), t0, d, false).unwrap()
    }

    fn assert_close(a: &DVector<f64>, b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn a0_examples() {
        assert_close(
            &build_a0(&setting(vec![0.0, 1.0], 0.25, 2)),
            &[0.75, 0.25],
            1e-15,
        );

        let a0 = build_a0(&grid16_setting(0.0, 1));
        let mut e = vec![0.0; 16];
        e[7] = 1.0;
        assert_close(&a0, &e, 0.0);

        let s = setting(vec![0.0, 1.0, 2.0], 1.0, 3);
        let a0 = build_a0(&s);
        assert_close(&a0, &[0.0, 1.0, 0.0], 1e-15);
        assert!(reproduction_residual(&a0, &s) < 1e-15);

        let zero = build_a0(&setting(vec![0.0, 1.0], 0.5, 0));
        assert_close(&zero, &[0.0, 0.0], 0.0);
    }

    #[test]
    fn a0_tie_breaks_to_lower_index() {
        // t0 = 0.5 is equidistant from 0 and 1.
        let a0 = build_a0(&setting(vec![0.0, 1.0, 2.0], 0.5, 1));
        assert_close(&a0, &[1.0, 0.0, 0.0], 0.0);
    }

    #[test]
    fn a0_is_feasible_for_both_constructions() {
        let s = setting(vec![-3.0, -1.0, 0.5, 2.0, 4.0, 7.0], 1.2, 4);
        for how in [A0Construction::NearestPoints, A0Construction::FirstPoints] {
            assert!(reproduction_residual(&build_a0_with(&s, how), &s) < 1e-12);
        }
    }

    #[test]
    fn identity_gives_uniform_mean() {
        for t0 in [-7.0, 0.25, 3.3, 8.0] {
            let r =
                solve_annihilation(&grid16_setting(t0, 1), &NoiseCovariance::identity(16)).unwrap();
            assert_close(r.coefficients(), &[1.0 / 16.0; 16], 1e-15);
            assert!((r.variance() - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn inverse_variance_weighting() {
        let cov = NoiseCovariance::diagonal(&[1.0, 4.0]).unwrap();
        for t0 in [0.0, 0.3, 1.0] {
            let s = setting(vec![0.0, 1.0], t0, 1);
            for r in [
                solve_annihilation(&s, &cov).unwrap(),
                solve_small_system(&s, &cov).unwrap(),
                solve_orthopoly(&s, &cov).unwrap(),
            ] {
                assert_close(r.coefficients(), &[0.8, 0.2], 1e-15);
            }
        }
        let r = solve_small_system(&setting(vec![0.0, 1.0], 0.5, 1), &cov).unwrap();
        let q = r.polynomial.unwrap();
        assert!((q.eval(0.0) - 0.8).abs() < 1e-15 && (q.eval(17.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn forced_interpolant_when_d_equals_n() {
        let cov = random_spd(2, 50.0, 3);
        let s = setting(vec![0.0, 1.0], 0.5, 2);
        for r in [
            solve_annihilation(&s, &cov).unwrap(),
            solve_small_system(&s, &cov).unwrap(),
            solve_orthopoly(&s, &cov).unwrap(),
        ] {
            assert_close(r.coefficients(), &[0.5, 0.5], 1e-14);
        }
        let s = setting(vec![0.0, 1.0], 0.25, 2);
        let r = solve_orthopoly(&s, &NoiseCovariance::identity(2)).unwrap();
        assert_close(r.coefficients(), &[0.75, 0.25], 1e-15);
    }

    #[test]
    fn no_constraint_gives_zero() {
        let s = setting(vec![0.0, 1.0, 2.0], 1.0, 0);
        let r = solve_annihilation(&s, &random_spd(3, 10.0, 1)).unwrap();
        assert_close(r.coefficients(), &[0.0; 3], 0.0);
        assert_eq!(r.variance(), 0.0);
        assert!(matches!(
            solve_small_system(&s, &NoiseCovariance::identity(3)),
            Err(Error::DegreeOutOfRange { .. })
        ));
        assert!(matches!(
            solve_orthopoly(&s, &NoiseCovariance::identity(3)),
            Err(Error::DegreeOutOfRange { .. })
        ));
        assert!(solve_all_routes(&s, &NoiseCovariance::identity(3)).is_err());
    }

    #[test]
    fn covariance_dimension_checked() {
        let s = grid16_setting(0.0, 2);
        assert!(matches!(
            solve_annihilation(&s, &NoiseCovariance::identity(15)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn seeded_cross_route_agreement() {
        let s = grid16_setting(0.25, 4);
        let cov = random_spd(16, 1e4, 42);
        let a = solve_annihilation(&s, &cov).unwrap();
        let b = solve_small_system(&s, &cov).unwrap();
        let scale = a.coefficients().amax();
        assert!((a.coefficients() - b.coefficients()).amax() <= 1e-8 * scale);

        let s = grid16_setting(0.5, 3);
        let cov = random_spd(16, 1e4, 43);
        let a = solve_annihilation(&s, &cov).unwrap();
        let c = solve_orthopoly(&s, &cov).unwrap();
        let scale = a.coefficients().amax();
        assert!((a.coefficients() - c.coefficients()).amax() <= 1e-8 * scale);
    }

    #[test]
    fn all_routes_identity() {
        let r = solve_all_routes(&grid16_setting(0.0, 2), &NoiseCovariance::identity(16)).unwrap();
        assert!(r.residuals.cross_route.unwrap() <= 1e-10);
        assert!(!r.ill_conditioned);
    }

    #[test]
    fn all_routes_d_equals_n() {
        let s = setting(vec![-1.0, 0.0, 2.0], 0.5, 3);
        let r = solve_all_routes(&s, &random_spd(3, 100.0, 9)).unwrap();
        let lagrange = lagrange_weights(&[-1.0, 0.0, 2.0], 0.5);
        assert_close(r.coefficients(), &lagrange, 1e-13);
    }

    #[test]
    fn kernel_check_examples() {
        let s = grid16_setting(0.25, 2);
        let cov = NoiseCovariance::identity(16);
        let op = build_annihilator(s.grid(), 2).unwrap();
        let best = solve_annihilation(&s, &cov).unwrap();
        assert!(kernel_check(best.coefficients(), &cov, &op).unwrap() <= 1e-9);
        let a0 = build_a0(&s);
        assert!(kernel_check(&a0, &cov, &op).unwrap() > 1e-3);
        assert!(crate::covariance::variance_of(&a0, &cov).unwrap() > best.variance());

        let diag = NoiseCovariance::diagonal(&[1.0, 2.0, 5.0, 0.5]).unwrap();
        let inv: Vec<f64> = [1.0, 0.5, 0.2, 2.0].to_vec();
        let total: f64 = inv.iter().sum();
        let a = DVector::from_iterator(4, inv.iter().map(|v| v / total));
        let op = build_annihilator(&Grid::integers(0, 4).unwrap(), 1).unwrap();
        assert!(kernel_check(&a, &diag, &op).unwrap() <= 1e-12);

        assert!(kernel_check(&DVector::zeros(3), &diag, &op).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert!((variance_lower_bound(&NoiseCovariance::identity(16)) - 1.0 / 16.0).abs() < 1e-16);
        let d = NoiseCovariance::diagonal(&[1.0, 4.0]).unwrap();
        assert!((variance_lower_bound(&d) - 0.8).abs() < 1e-15);
        for eps in [1e-6, 1e-3, 0.5] {
            let mut diag = vec![eps; 8];
            diag.extend([1.0; 8]);
            let c = NoiseCovariance::diagonal(&diag).unwrap();
            let expected = eps / (8.0 * (1.0 + eps));
            assert!((variance_lower_bound(&c) - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn ill_conditioning_is_flagged_not_rejected() {
        // High-order differences on a long grid give a badly conditioned system.
        let s = make_setting(Grid::integers(0, 64).unwrap(), 3.3, 8, false).unwrap();
        let r = solve_annihilation(&s, &NoiseCovariance::identity(64)).unwrap();
        assert!(r.ill_conditioned);
        assert!(r.condition_estimate > ILL_CONDITIONED_THRESHOLD);

        let r =
            solve_annihilation(&grid16_setting(0.25, 4), &NoiseCovariance::identity(16)).unwrap();
        assert!(!r.ill_conditioned);
    }

    #[test]
    fn independent_of_starting_point_and_operator() {
        let mut r = rng(11);
        let s = grid16_setting(0.5, 3);
        let cov = random_spd(16, 1e3, 12);
        let op = build_annihilator(s.grid(), 3).unwrap();
        let near = solve_annihilation_with(&s, &cov, &op, &build_a0(&s)).unwrap();
        let first = solve_annihilation_with(
            &s,
            &cov,
            &op,
            &build_a0_with(&s, A0Construction::FirstPoints),
        )
        .unwrap();
        assert!((near.coefficients() - first.coefficients()).amax() <= 1e-9);

        let t = crate::fixtures::random_invertible(13, &mut r);
        let moved = op.left_multiplied(&t).unwrap();
        let other = solve_annihilation_with(&s, &cov, &moved, &build_a0(&s)).unwrap();
        let scale = near.coefficients().amax();
        assert!((near.coefficients() - other.coefficients()).amax() <= 1e-8 * scale);
    }
}
