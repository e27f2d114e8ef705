use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing sample abscissae.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite { what: "grid" });
        }
        for (index, w) in points.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(Error::NonMonotoneGrid {
                    index: index + 1,
                    prev: w[0],
                    next: w[1],
                });
            }
        }
        Ok(Self { points })
    }

    /// `count` consecutive integers starting at `first`.
    pub fn integers(first: i64, count: usize) -> Result<Self> {
        Self::new((0..count as i64).map(|k| (first + k) as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// The grid `t0 + h (x - t0)`.
    pub fn scaled_about(&self, t0: f64, h: f64) -> Result<Self> {
        Self::new(self.points.iter().map(|&x| t0 + h * (x - t0)).collect())
    }

    /// Sub-grid at the given (increasing) indices.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        Self::new(indices.iter().map(|&i| self.points[i]).collect())
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(grid: Grid) -> Self {
        grid.points
    }
}

/// A grid, an evaluation point and the number `d` of reproduced monomials
/// (the approximant is exact on polynomials of degree below `d`).
#[derive(Debug, Clone, PartialEq)]
pub struct StencilSetting {
    grid: Grid,
    t0: f64,
    degree: usize,
}

impl StencilSetting {
    pub fn new(grid: Grid, t0: f64, degree: usize, allow_extrapolation: bool) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::NonFinite { what: "t0" });
        }
        if degree > grid.len() {
            return Err(Error::DegreeOutOfRange {
                degree,
                min: 0,
                max: grid.len(),
            });
        }
        if !allow_extrapolation && (t0 < grid.first() || t0 > grid.last()) {
            return Err(Error::ExtrapolationNotAllowed {
                t0,
                lo: grid.first(),
                hi: grid.last(),
            });
        }
        Ok(Self { grid, t0, degree })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Number of reproduction constraints `d`; polynomials of degree `< d` are reproduced.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Same setting with a different number of constraints.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        Self::new(self.grid.clone(), self.t0, degree, true)
    }
}

/// Validate `grid`, `t0` and `d` into a [`StencilSetting`].
pub fn make_setting(
    grid: Grid,
    t0: f64,
    degree: usize,
    allow_extrapolation: bool,
) -> Result<StencilSetting> {
    StencilSetting::new(grid, t0, degree, allow_extrapolation)
}
