//! Binary subdivision and moving-window smoothing of periodic sequences with
//! minimum-variance rules.
//!
//! Sequences live on a uniform periodic grid `t_i = i · span / M`. A stencil
//! for index `i` covers `t_{i-n+1}, …, t_{i+n}`; abscissae are taken on the
//! real line so they stay increasing across the seam, while data indices wrap
//! modulo `M`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::covariance::NoiseCovariance;
use crate::error::{Error, Result};
use crate::grid::{make_setting, Grid};
use crate::solver::solve_annihilation;

/// Periodic samples, one or more components sharing the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSequence {
    components: Vec<Vec<f64>>,
    span: f64,
}

impl PeriodicSequence {
    pub fn new(components: Vec<Vec<f64>>, span: f64) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        };
        let len = first.len();
        if len == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        for c in &components {
            if c.len() != len {
                return Err(Error::DimensionMismatch {
                    expected: len,
                    found: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "sequence" });
            }
        }
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::NonFinite { what: "span" });
        }
        Ok(Self { components, span })
    }

    /// Single-component sequence on the integer grid (`span = M`).
    pub fn scalar(values: Vec<f64>) -> Result<Self> {
        let span = values.len() as f64;
        Self::new(vec![values], span)
    }

    pub fn len(&self) -> usize {
        self.components[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn spacing(&self) -> f64 {
        self.span / self.len() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Sequence with `out[i] = self[i + shift]`.
    pub fn rotated(&self, shift: usize) -> Self {
        let m = self.len();
        let components = self
            .components
            .iter()
            .map(|c| (0..m).map(|i| c[(i + shift) % m]).collect())
            .collect();
        Self {
            components,
            span: self.span,
        }
    }
}

/// Covariance of the stencil used at `(level, index)`.
pub type CovarianceFn = dyn Fn(usize, usize) -> Result<NoiseCovariance> + Send + Sync;

#[derive(Clone)]
pub enum CovarianceProvider {
    /// One covariance for every stencil; rules are computed once per level.
    Uniform(NoiseCovariance),
    /// Covariance varies with level and index; rules are recomputed per index.
    PerIndex(Arc<CovarianceFn>),
}

impl std::fmt::Debug for CovarianceProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Uniform(c) => f.debug_tuple("Uniform").field(&c.dim()).finish(),
            Self::PerIndex(_) => f.write_str("PerIndex(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SchemeConfig {
    half_width_n: usize,
    degree: usize,
    covariance: CovarianceProvider,
}

impl SchemeConfig {
    /// `degree` is the number of reproduction constraints `d` (`d <= 2n`).
    pub fn new(half_width_n: usize, degree: usize, covariance: CovarianceProvider) -> Result<Self> {
        if half_width_n == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if degree > 2 * half_width_n {
            return Err(Error::DegreeOutOfRange {
                degree,
                min: 0,
                max: 2 * half_width_n,
            });
        }
        if let CovarianceProvider::Uniform(c) = &covariance {
            if c.dim() != 2 * half_width_n {
                return Err(Error::DimensionMismatch {
                    expected: 2 * half_width_n,
                    found: c.dim(),
                });
            }
        }
        Ok(Self {
            half_width_n,
            degree,
            covariance,
        })
    }

    pub fn identity(half_width_n: usize, degree: usize) -> Result<Self> {
        Self::new(
            half_width_n,
            degree,
            CovarianceProvider::Uniform(NoiseCovariance::identity(2 * half_width_n)),
        )
    }

    pub fn half_width(&self) -> usize {
        self.half_width_n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn stencil_width(&self) -> usize {
        2 * self.half_width_n
    }

    /// Stencil offsets `-n+1, …, n` relative to the centre index.
    fn offsets(&self) -> impl Iterator<Item = i64> + Clone {
        let n = self.half_width_n as i64;
        (-n + 1)..=n
    }
}

/// Coefficients of the minimum-variance rule on the local stencil
/// `(j h)_{j=-n+1..n}` evaluated at `t0`.
fn local_rule(cfg: &SchemeConfig, h: f64, t0: f64, cov: &NoiseCovariance) -> Result<Vec<f64>> {
    let grid = Grid::new(cfg.offsets().map(|j| j as f64 * h).collect())?;
    let setting = make_setting(grid, t0, cfg.degree, false)?;
    Ok(solve_annihilation(&setting, cov)?
        .coefficients()
        .iter()
        .copied()
        .collect())
}

fn apply_rule(
    values: &[f64],
    centre: usize,
    offsets: impl Iterator<Item = i64>,
    rule: &[f64],
) -> f64 {
    let m = values.len() as i64;
    offsets
        .zip(rule)
        .map(|(j, a)| a * values[(centre as i64 + j).rem_euclid(m) as usize])
        .sum()
}

fn check_width(seq: &PeriodicSequence, cfg: &SchemeConfig) -> Result<()> {
    if seq.len() < cfg.stencil_width() {
        return Err(Error::StencilTooWide {
            width: cfg.stencil_width(),
            len: seq.len(),
        });
    }
    Ok(())
}

/// One step of the binary scheme: `out[2i]` evaluates at `t_i`, `out[2i+1]`
/// at the midpoint `t_i + h/2`, both from the stencil `f_{i-n+1..i+n}`.
pub fn refine_once(
    seq: &PeriodicSequence,
    cfg: &SchemeConfig,
    level: usize,
) -> Result<PeriodicSequence> {
    check_width(seq, cfg)?;
    let m = seq.len();
    let h = seq.spacing();
    let rules: Vec<(Vec<f64>, Vec<f64>)> = match &cfg.covariance {
        CovarianceProvider::Uniform(cov) => {
            let even = local_rule(cfg, h, 0.0, cov)?;
            let odd = local_rule(cfg, h, 0.5 * h, cov)?;
            vec![(even, odd)]
        }
        CovarianceProvider::PerIndex(provider) => (0..m)
            .into_par_iter()
            .map(|i| {
                let cov = provider(level, i)?;
                Ok((
                    local_rule(cfg, h, 0.0, &cov)?,
                    local_rule(cfg, h, 0.5 * h, &cov)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?,
    };
    let components = seq
        .components
        .iter()
        .map(|values| {
            let mut out = vec![0.0; 2 * m];
            for i in 0..m {
                let (even, odd) = &rules[i % rules.len()];
                out[2 * i] = apply_rule(values, i, cfg.offsets(), even);
                out[2 * i + 1] = apply_rule(values, i, cfg.offsets(), odd);
            }
            out
        })
        .collect();
    PeriodicSequence::new(components, seq.span)
}

/// `levels` successive refinements; element `k` has length `M · 2^(k+1)`.
pub fn refine(
    seq: &PeriodicSequence,
    cfg: &SchemeConfig,
    levels: usize,
) -> Result<Vec<PeriodicSequence>> {
    let mut out = Vec::with_capacity(levels);
    let mut current = seq.clone();
    for level in 0..levels {
        current = refine_once(&current, cfg, level)?;
        out.push(current.clone());
    }
    Ok(out)
}

/// Block-diagonal covariance made of copies of one SPD block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCovariance {
    block: NoiseCovariance,
}

impl BlockCovariance {
    pub fn new(block: NoiseCovariance) -> Self {
        Self { block }
    }

    pub fn block(&self) -> &NoiseCovariance {
        &self.block
    }

    pub fn period(&self) -> usize {
        self.block.dim()
    }

    /// Entry `(i, j)` of the global matrix.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let b = self.period();
        if i / b == j / b {
            self.block.matrix()[(i % b, j % b)]
        } else {
            0.0
        }
    }

    /// Global `len × len` covariance (`len` a multiple of the period).
    pub fn global(&self, len: usize) -> Result<NoiseCovariance> {
        if !len.is_multiple_of(self.period()) {
            return Err(Error::BlockMismatch {
                len,
                block: self.period(),
            });
        }
        NoiseCovariance::new(DMatrix::from_fn(len, len, |i, j| self.entry(i, j)))
    }
}

fn stencil_indices(cfg: &SchemeConfig, centre: usize, m: usize) -> Vec<usize> {
    cfg.offsets()
        .map(|j| (centre as i64 + j).rem_euclid(m as i64) as usize)
        .collect()
}

/// Re-estimate every sample from its own stencil: entry `i` applies the
/// minimum-variance rule at `t0 = t_i` with the stencil covariance taken as
/// the principal submatrix of the global block-diagonal covariance.
pub fn smooth_in_place(
    seq: &PeriodicSequence,
    cfg: &SchemeConfig,
    cov_global: &BlockCovariance,
) -> Result<PeriodicSequence> {
    check_width(seq, cfg)?;
    let m = seq.len();
    let period = cov_global.period();
    if !m.is_multiple_of(period) {
        return Err(Error::BlockMismatch {
            len: m,
            block: period,
        });
    }
    let h = seq.spacing();
    // The stencil covariance only depends on the centre modulo the block period.
    let rules = (0..period)
        .into_par_iter()
        .map(|r| {
            let idx = stencil_indices(cfg, r, m);
            let w = idx.len();
            let cov = NoiseCovariance::new(DMatrix::from_fn(w, w, |a, b| {
                cov_global.entry(idx[a], idx[b])
            }))?;
            local_rule(cfg, h, 0.0, &cov)
        })
        .collect::<Result<Vec<_>>>()?;
    let components = seq
        .components
        .iter()
        .map(|values| {
            (0..m)
                .map(|i| apply_rule(values, i, cfg.offsets(), &rules[i % period]))
                .collect()
        })
        .collect();
    PeriodicSequence::new(components, seq.span)
}

/// Moving average over the same `2n`-point stencil (all weights `1/(2n)`).
pub fn smooth_uniform(seq: &PeriodicSequence, half_width_n: usize) -> Result<PeriodicSequence> {
    let cfg = SchemeConfig::identity(half_width_n, 0)?;
    check_width(seq, &cfg)?;
    let w = cfg.stencil_width();
    let rule = vec![1.0 / w as f64; w];
    let components = seq
        .components
        .iter()
        .map(|values| {
            (0..seq.len())
                .map(|i| apply_rule(values, i, cfg.offsets(), &rule))
                .collect()
        })
        .collect();
    PeriodicSequence::new(components, seq.span)
}

/// Rule coefficients `(even, odd)` for a shift-invariant covariance.
pub fn refinement_rules(cfg: &SchemeConfig, h: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    let CovarianceProvider::Uniform(cov) = &cfg.covariance else {
        return Err(Error::DimensionMismatch {
            expected: cfg.stencil_width(),
            found: 0,
        });
    };
    Ok((
        DVector::from_vec(local_rule(cfg, h, 0.0, cov)?),
        DVector::from_vec(local_rule(cfg, h, 0.5 * h, cov)?),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::random_spd;

    fn poly(x: f64, c: &[f64]) -> f64 {
        c.iter().rev().fold(0.0, |acc, ci| acc * x + ci)
    }

    #[test]
    fn constants_are_preserved() {
        let seq = PeriodicSequence::scalar(vec![2.5; 20]).unwrap();
        let cfg =
            SchemeConfig::new(3, 2, CovarianceProvider::Uniform(random_spd(6, 100.0, 5))).unwrap();
        let out = refine_once(&seq, &cfg, 0).unwrap();
        assert_eq!(out.len(), 40);
        for v in &out.components()[0] {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_average_rules() {
        let cfg = SchemeConfig::identity(8, 1).unwrap();
        let (even, odd) = refinement_rules(&cfg, 1.0).unwrap();
        for v in even.iter().chain(odd.iter()) {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_samples_reproduced_away_from_seam() {
        // A linear function is not periodic, so only check indices whose
        // stencil does not wrap.
        let m = 32;
        let seq = PeriodicSequence::scalar((0..m).map(|i| 3.0 - 0.5 * i as f64).collect()).unwrap();
        let cfg =
            SchemeConfig::new(2, 2, CovarianceProvider::Uniform(random_spd(4, 10.0, 8))).unwrap();
        let out = refine_once(&seq, &cfg, 0).unwrap();
        for i in 2..(m - 2) {
            for (k, t) in [(2 * i, i as f64), (2 * i + 1, i as f64 + 0.5)] {
                assert!((out.components()[0][k] - (3.0 - 0.5 * t)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stencil_too_wide() {
        let seq = PeriodicSequence::scalar(vec![0.0; 8]).unwrap();
        let cfg = SchemeConfig::identity(8, 1).unwrap();
        assert!(matches!(
            refine_once(&seq, &cfg, 0),
            Err(Error::StencilTooWide { width: 16, len: 8 })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::identity(0, 0).is_err());
        assert!(SchemeConfig::identity(2, 5).is_err());
        assert!(SchemeConfig::new(
            2,
            1,
            CovarianceProvider::Uniform(NoiseCovariance::identity(3))
        )
        .is_err());
    }

    #[test]
    fn per_index_provider_matches_uniform() {
        let cov = random_spd(4, 30.0, 21);
        let shared = cov.clone();
        let seq =
            PeriodicSequence::scalar((0..12).map(|i| (i as f64 * 0.7).sin()).collect()).unwrap();
        let uni = SchemeConfig::new(2, 2, CovarianceProvider::Uniform(cov)).unwrap();
        let per = SchemeConfig::new(
            2,
            2,
            CovarianceProvider::PerIndex(Arc::new(move |_, _| Ok(shared.clone()))),
        )
        .unwrap();
        let a = refine_once(&seq, &uni, 0).unwrap();
        let b = refine_once(&seq, &per, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shift_equivariance() {
        let seq =
            PeriodicSequence::scalar((0..24).map(|i| ((i * i) % 7) as f64).collect()).unwrap();
        let cfg =
            SchemeConfig::new(3, 3, CovarianceProvider::Uniform(random_spd(6, 1e3, 2))).unwrap();
        let base = refine_once(&seq, &cfg, 0).unwrap();
        for shift in [1, 5, 23] {
            let moved = refine_once(&seq.rotated(shift), &cfg, 0).unwrap();
            assert_eq!(moved, base.rotated(2 * shift));
        }
    }

    #[test]
    fn polynomial_reproduction_through_refinement() {
        // Periodic data that is locally polynomial: use a single period long
        // enough that no stencil near the checked indices wraps.
        let c = [0.3, -1.1, 0.25];
        let m = 40;
        let h = 0.125;
        let seq = PeriodicSequence::new(
            vec![(0..m).map(|i| poly(i as f64 * h, &c)).collect()],
            m as f64 * h,
        )
        .unwrap();
        let cfg =
            SchemeConfig::new(4, 3, CovarianceProvider::Uniform(random_spd(8, 1e3, 4))).unwrap();
        let out = refine_once(&seq, &cfg, 0).unwrap();
        for i in 4..(m - 4) {
            for (k, t) in [(2 * i, i as f64 * h), (2 * i + 1, (i as f64 + 0.5) * h)] {
                let exact = poly(t, &c);
                assert!((out.components()[0][k] - exact).abs() <= 1e-9 * exact.abs().max(1.0));
            }
        }
    }

    #[test]
    fn smoothing_identity_is_local_least_squares() {
        let m = 32;
        let seq = PeriodicSequence::new(
            vec![(0..m)
                .map(|i| (i as f64 * 0.37).cos() + 0.1 * ((i * 7) % 5) as f64)
                .collect()],
            2.0 * std::f64::consts::PI,
        )
        .unwrap();
        let cfg = SchemeConfig::identity(8, 2).unwrap();
        let block = BlockCovariance::new(NoiseCovariance::identity(16));
        let out = smooth_in_place(&seq, &cfg, &block).unwrap();
        let h = seq.spacing();
        // Regression oracle: fit y = b0 + b1 x over the window, evaluate at x = 0.
        for i in 0..m {
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for j in -7i64..=8 {
                let x = j as f64 * h;
                let y = seq.components()[0][(i as i64 + j).rem_euclid(m as i64) as usize];
                sx += x;
                sy += y;
                sxx += x * x;
                sxy += x * y;
            }
            let k = 16.0;
            let b1 = (k * sxy - sx * sy) / (k * sxx - sx * sx);
            let b0 = (sy - b1 * sx) / k;
            assert!((out.components()[0][i] - b0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_mismatch() {
        let seq = PeriodicSequence::scalar(vec![1.0; 20]).unwrap();
        let cfg = SchemeConfig::identity(2, 1).unwrap();
        let block = BlockCovariance::new(NoiseCovariance::identity(16));
        assert!(matches!(
            smooth_in_place(&seq, &cfg, &block),
            Err(Error::BlockMismatch { len: 20, block: 16 })
        ));
        assert!(block.global(20).is_err());
        assert_eq!(block.global(32).unwrap().dim(), 32);
    }

    #[test]
    fn uniform_smoothing_weights() {
        let seq = PeriodicSequence::scalar((0..16).map(|i| i as f64).collect()).unwrap();
        let out = smooth_uniform(&seq, 2).unwrap();
        // Window i-1..i+2 averages to i + 0.5 away from the seam.
        assert!((out.components()[0][5] - 5.5).abs() < 1e-15);
    }
}
