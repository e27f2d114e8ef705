//! Covariance families and the variance-ratio / star-curve studies.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{variance_of, NoiseCovariance};
use crate::error::{Error, Result};
use crate::fixtures::rng;
use crate::grid::{make_setting, Grid};
use crate::solver::solve_annihilation;
use crate::subdivision::{
    smooth_in_place, smooth_uniform, BlockCovariance, PeriodicSequence, SchemeConfig,
};

/// Default evaluation points of the ratio sweep.
pub const DEFAULT_T0S: [f64; 3] = [0.0, 0.25, 0.5];
/// Default polynomial degrees `d'` (the rule reproduces degree `≤ d'`).
pub const DEFAULT_DPRIMES: [usize; 4] = [0, 1, 2, 3];
/// Points per default epsilon sweep.
pub const SWEEP_POINTS: usize = 40;
/// Lower end of the default epsilon sweep.
pub const SWEEP_MIN_EPSILON: f64 = 1e-6;

pub const STAR_SAMPLES: usize = 320;
pub const STAR_EPSILON: f64 = 1e-10;
pub const STAR_HALF_WIDTH: usize = 8;
pub const STAR_DPRIME: usize = 1;
pub const CANONICAL_SEED: u64 = 2025;

/// The 16-point grid `(-7, …, 8)`.
pub fn experiment_grid() -> Grid {
    Grid::integers(-7, 16).expect("fixed grid is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Experiment {
    /// Uncorrelated noise, variance `ε` on `x ≤ 0` and `1` elsewhere.
    One,
    /// Unit variance, strongly correlated neighbours in 4×4 blocks.
    Two,
}

impl Experiment {
    pub fn id(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            _ => None,
        }
    }

    /// Open interval of admissible `ε`.
    pub fn epsilon_range(self) -> (f64, f64) {
        match self {
            Self::One => (0.0, 1.0),
            Self::Two => (0.0, 0.1),
        }
    }

    pub fn matrix(self, epsilon: f64) -> Result<DMatrix<f64>> {
        let (lo, hi) = self.epsilon_range();
        if !(epsilon > lo && epsilon < hi) {
            return Err(Error::EpsilonOutOfRange { epsilon, lo, hi });
        }
        Ok(match self {
            Self::One => experiment1_matrix(epsilon),
            Self::Two => experiment2_matrix(epsilon),
        })
    }

    pub fn covariance(self, epsilon: f64) -> Result<NoiseCovariance> {
        NoiseCovariance::new(self.matrix(epsilon)?)
    }

    /// `SWEEP_POINTS` log-spaced values from `SWEEP_MIN_EPSILON` up to just
    /// inside the open upper end of the range.
    pub fn default_epsilons(self) -> Vec<f64> {
        let (_, hi) = self.epsilon_range();
        log_grid(SWEEP_MIN_EPSILON, upper_inside(hi), SWEEP_POINTS)
    }
}

/// Largest value we treat as "just inside" an open upper bound.
pub fn upper_inside(hi: f64) -> f64 {
    hi * (1.0 - 1e-9)
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == count - 1 {
                hi
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

fn experiment1_matrix(epsilon: f64) -> DMatrix<f64> {
    let grid = experiment_grid();
    let diag: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| if x <= 0.0 { epsilon } else { 1.0 })
        .collect();
    DMatrix::from_diagonal(&DVector::from_vec(diag))
}

/// The 4×4 correlation block of the second experiment.
pub fn experiment2_block(epsilon: f64) -> DMatrix<f64> {
    let e = epsilon;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0,
            -1.0 + e,
            0.0,
            0.0, //
            -1.0 + e,
            1.0,
            -e,
            0.0, //
            0.0,
            -e,
            1.0,
            -e, //
            0.0,
            0.0,
            -e,
            1.0,
        ],
    )
}

fn experiment2_matrix(epsilon: f64) -> DMatrix<f64> {
    let block = experiment2_block(epsilon);
    let mut m = DMatrix::zeros(16, 16);
    for b in 0..4 {
        m.view_mut((4 * b, 4 * b), (4, 4)).copy_from(&block);
    }
    m
}

/// 16×16 diagonal covariance of the first experiment.
pub fn cov_experiment1(epsilon: f64) -> Result<NoiseCovariance> {
    Experiment::One.covariance(epsilon)
}

/// 16×16 block-diagonal covariance of the second experiment.
pub fn cov_experiment2(epsilon: f64) -> Result<NoiseCovariance> {
    Experiment::Two.covariance(epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoRecord {
    pub experiment: u8,
    pub epsilon: f64,
    pub t0: f64,
    pub dprime: usize,
    pub rho: f64,
}

/// Variance of the minimum-variance rule divided by that of the plain
/// 16-point mean, on the experiment grid.
pub fn rho(experiment: Experiment, epsilon: f64, t0: f64, dprime: usize) -> Result<f64> {
    let cov = experiment.covariance(epsilon)?;
    let setting = make_setting(experiment_grid(), t0, dprime + 1, false)?;
    let best = solve_annihilation(&setting, &cov)?;
    let mean = DVector::from_element(16, 1.0 / 16.0);
    Ok(best.variance() / variance_of(&mean, &cov)?)
}

/// Ratios for every `(ε, t0, d')`, ordered by `ε` ascending, then `t0`, then `d'`
/// in the order given.
pub fn rho_sweep(
    experiment: Experiment,
    epsilons: &[f64],
    t0s: &[f64],
    dprimes: &[usize],
) -> Result<Vec<RhoRecord>> {
    let mut eps: Vec<f64> = epsilons.to_vec();
    eps.sort_by(f64::total_cmp);
    let jobs: Vec<(f64, f64, usize)> = eps
        .iter()
        .flat_map(|&e| {
            t0s.iter()
                .flat_map(move |&t| dprimes.iter().map(move |&d| (e, t, d)))
        })
        .collect();
    jobs.into_par_iter()
        .map(|(epsilon, t0, dprime)| {
            Ok(RhoRecord {
                experiment: experiment.id(),
                epsilon,
                t0,
                dprime,
                rho: rho(experiment, epsilon, t0, dprime)?,
            })
        })
        .collect()
}

/// `Ωᵀ z` for standard normal `z` drawn from a ChaCha stream seeded with `seed`.
pub fn sample_noise(cov: &NoiseCovariance, seed: u64) -> DVector<f64> {
    let mut r = rng(seed);
    sample_noise_with(cov, &mut r)
}

pub fn sample_noise_with<R: Rng>(cov: &NoiseCovariance, rng: &mut R) -> DVector<f64> {
    let z = DVector::from_fn(cov.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    cov.color(&z).expect("dimension matches")
}

/// Same draw as [`sample_noise_with`] on `blocks.global(len)`, colored one
/// block at a time instead of through the dense global factor.
pub fn sample_block_noise<R: Rng>(
    blocks: &BlockCovariance,
    len: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let p = blocks.period();
    if !len.is_multiple_of(p) {
        return Err(Error::BlockMismatch { len, block: p });
    }
    let z = DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut out = DVector::zeros(len);
    for start in (0..len).step_by(p) {
        let colored = blocks.block().color(&z.rows(start, p).into_owned())?;
        out.rows_mut(start, p).copy_from(&colored);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StarVariant {
    Exp1Noise,
    Exp2Noise,
}

impl StarVariant {
    pub fn experiment(self) -> Experiment {
        match self {
            Self::Exp1Noise => Experiment::One,
            Self::Exp2Noise => Experiment::Two,
        }
    }

    /// `½ Ω̂^ε` of the matching experiment with `ε = 1e-10`.
    pub fn block(self) -> Result<NoiseCovariance> {
        self.experiment().covariance(STAR_EPSILON)?.scaled(0.5)
    }
}

/// The star curve `(4 cos t + cos 4t, 4 sin t - sin 4t)`.
pub fn star_curve(t: f64) -> (f64, f64) {
    (
        4.0 * t.cos() + (4.0 * t).cos(),
        4.0 * t.sin() - (4.0 * t).sin(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarRun {
    pub seed: u64,
    pub variant: StarVariant,
    pub t: Vec<f64>,
    pub truth: [Vec<f64>; 2],
    pub noisy: [Vec<f64>; 2],
    pub refined_mv: [Vec<f64>; 2],
    pub refined_avg: [Vec<f64>; 2],
    pub mse_mv: f64,
    pub mse_avg: f64,
}

fn mse(estimate: &[Vec<f64>], truth: &[Vec<f64>; 2]) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (e, t) in estimate.iter().zip(truth) {
        for (a, b) in e.iter().zip(t) {
            total += (a - b) * (a - b);
            count += 1;
        }
    }
    total / count as f64
}

pub fn run_star(variant: StarVariant, seed: u64) -> Result<StarRun> {
    run_star_with(variant, seed, true)
}

/// Star study; with `inject_noise = false` the smoothing bias alone is measured.
pub fn run_star_with(variant: StarVariant, seed: u64, inject_noise: bool) -> Result<StarRun> {
    let m = STAR_SAMPLES;
    let t: Vec<f64> = (0..m).map(|i| 2.0 * PI * i as f64 / m as f64).collect();
    let (tx, ty): (Vec<f64>, Vec<f64>) = t.iter().map(|&ti| star_curve(ti)).unzip();
    let truth = [tx, ty];

    let blocks = BlockCovariance::new(variant.block()?);
    let noisy: [Vec<f64>; 2] = if inject_noise {
        let mut r = rng(seed);
        let ex = sample_block_noise(&blocks, m, &mut r)?;
        let ey = sample_block_noise(&blocks, m, &mut r)?;
        [
            truth[0].iter().zip(ex.iter()).map(|(a, b)| a + b).collect(),
            truth[1].iter().zip(ey.iter()).map(|(a, b)| a + b).collect(),
        ]
    } else {
        truth.clone()
    };

    let seq = PeriodicSequence::new(noisy.to_vec(), 2.0 * PI)?;
    let cfg = SchemeConfig::identity(STAR_HALF_WIDTH, STAR_DPRIME + 1)?;
    let mv = smooth_in_place(&seq, &cfg, &blocks)?;
    let avg = smooth_uniform(&seq, STAR_HALF_WIDTH)?;
    let to_pair = |s: &PeriodicSequence| [s.components()[0].clone(), s.components()[1].clone()];
    let refined_mv = to_pair(&mv);
    let refined_avg = to_pair(&avg);
    Ok(StarRun {
        seed,
        variant,
        mse_mv: mse(&refined_mv, &truth),
        mse_avg: mse(&refined_avg, &truth),
        t,
        truth,
        noisy,
        refined_mv,
        refined_avg,
    })
}
