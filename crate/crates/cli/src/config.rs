//! JSON run configurations. Unknown fields are rejected everywhere.

use std::path::{Path, PathBuf};

use mvapprox::experiments::{experiment_grid, Experiment};
use mvapprox::NoiseCovariance;
use serde::Deserialize;

use crate::error::CliError;
use crate::io::read_matrix_csv;

/// Where a covariance matrix comes from.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceSource {
    Identity {},
    /// Dense row-major matrix.
    Inline {
        rows: Vec<Vec<f64>>,
    },
    /// N rows of N comma-separated reals; relative paths resolve against the config file.
    Csv {
        path: PathBuf,
    },
    Experiment1 {
        epsilon: Option<f64>,
    },
    Experiment2 {
        epsilon: Option<f64>,
    },
}

impl CovarianceSource {
    /// Builds the matrix for dimension `n`. `epsilon` overrides the file value
    /// for the experiment kinds.
    pub fn build(
        &self,
        n: usize,
        epsilon: Option<f64>,
        base: Option<&Path>,
    ) -> Result<NoiseCovariance, CliError> {
        let experiment = |exp: Experiment, from_file: Option<f64>| {
            let eps = epsilon.or(from_file).ok_or_else(|| {
                CliError::Usage(format!(
                    "experiment{} covariance needs an epsilon (config field or --epsilon)",
                    exp.id()
                ))
            })?;
            let (lo, hi) = exp.epsilon_range();
            if !(eps > lo && eps < hi) {
                return Err(CliError::Usage(format!(
                    "epsilon {eps} outside ({lo}, {hi}) for experiment {}",
                    exp.id()
                )));
            }
            Ok(exp.covariance(eps)?)
        };
        match self {
            Self::Identity {} => Ok(NoiseCovariance::identity(n)),
            Self::Inline { rows } => Ok(NoiseCovariance::from_rows(rows)?),
            Self::Csv { path } => {
                let resolved = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                let rows = read_matrix_csv(&resolved)?;
                Ok(NoiseCovariance::from_rows(&rows)?)
            }
            Self::Experiment1 { epsilon: e } => experiment(Experiment::One, *e),
            Self::Experiment2 { epsilon: e } => experiment(Experiment::Two, *e),
        }
    }
}

impl Default for CovarianceSource {
    fn default() -> Self {
        Self::Identity {}
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    /// Defaults to the 16-point grid `(-7, ..., 8)`.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub dprime: Option<usize>,
    #[serde(default)]
    pub allow_extrapolation: bool,
    #[serde(default)]
    pub covariance: CovarianceSource,
}

impl SolveConfig {
    pub fn grid_points(&self) -> Vec<f64> {
        self.grid
            .clone()
            .unwrap_or_else(|| experiment_grid().points().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RhoConfig {
    #[serde(default)]
    pub experiments: Option<Vec<u8>>,
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default)]
    pub t0s: Option<Vec<f64>>,
    #[serde(default)]
    pub dprimes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubdivideConfig {
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub dprime: Option<usize>,
    /// Must be `2n × 2n`; identity when absent.
    #[serde(default)]
    pub covariance: CovarianceSource,
    /// Parameter length of one period; defaults to the number of samples.
    #[serde(default)]
    pub span: Option<f64>,
}

/// Reads and parses a JSON config; parse errors carry line and column.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}
