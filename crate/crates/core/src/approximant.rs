use nalgebra::DVector;

use crate::covariance::{variance_of, NoiseCovariance};
use crate::error::{Error, Result};
use crate::grid::StencilSetting;

/// Relative tolerance on the moment conditions `Σ aᵢ xᵢˢ = t0ˢ`.
pub const REPRODUCTION_TOL: f64 = 1e-9;

/// Coefficients `a` of the linear rule `f ↦ Σ aᵢ fᵢ`, with the setting they
/// were built for and their noise variance `‖Ωa‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Approximant {
    coefficients: DVector<f64>,
    setting: StencilSetting,
    variance: f64,
}

impl Approximant {
    pub fn new(
        coefficients: DVector<f64>,
        setting: StencilSetting,
        cov: &NoiseCovariance,
    ) -> Result<Self> {
        if coefficients.len() != setting.len() {
            return Err(Error::DimensionMismatch {
                expected: setting.len(),
                found: coefficients.len(),
            });
        }
        let variance = variance_of(&coefficients, cov)?;
        Ok(Self {
            coefficients,
            setting,
            variance,
        })
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn setting(&self) -> &StencilSetting {
        &self.setting
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Apply the rule to data sampled on the setting's grid.
    pub fn apply(&self, data: &[f64]) -> Result<f64> {
        if data.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coefficients.len(),
                found: data.len(),
            });
        }
        Ok(self.coefficients.iter().zip(data).map(|(a, f)| a * f).sum())
    }

    pub fn reproduction_residual(&self) -> f64 {
        reproduction_residual(&self.coefficients, &self.setting)
    }
}

/// `max_s |Σ aᵢ xᵢˢ - t0ˢ| / max(1, |t0|ˢ, maxᵢ |xᵢ|ˢ)` over `s < d`.
pub fn reproduction_residual(a: &DVector<f64>, setting: &StencilSetting) -> f64 {
    let xs = setting.grid().points();
    let t0 = setting.t0();
    let xmax = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut worst = 0.0f64;
    let mut powers = vec![1.0; xs.len()];
    for s in 0..setting.degree() {
        let moment: f64 = a.iter().zip(&powers).map(|(ai, p)| ai * p).sum();
        let target = t0.powi(s as i32);
        let scale = 1.0f64.max(target.abs()).max(xmax.powi(s as i32));
        worst = worst.max((moment - target).abs() / scale);
        for (p, x) in powers.iter_mut().zip(xs) {
            *p *= x;
        }
    }
    worst
}
