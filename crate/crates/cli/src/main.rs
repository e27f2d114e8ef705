//! `mvapprox` command-line front end.
//!
//! Exit codes: 0 success, 1 numeric or solver failure, 2 usage or config error.

mod config;
mod error;
mod io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mvapprox::experiments::{
    rho_sweep, run_star, Experiment, StarVariant, CANONICAL_SEED, DEFAULT_DPRIMES, DEFAULT_T0S,
};
use mvapprox::subdivision::{refine, CovarianceProvider, PeriodicSequence, SchemeConfig};
use mvapprox::{make_setting, solve_all_routes, Error, Grid, Route};
use serde::Serialize;

use config::{RhoConfig, SolveConfig, SubdivideConfig};
use error::CliError;
use io::{emit, fmt_f64};

const MAX_LEVELS: usize = 8;
const THREADS_ENV: &str = "MVAPPROX_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "mvapprox",
    version,
    about = "Minimum-variance linear approximants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one approximation problem and report coefficients as JSON.
    Solve {
        /// JSON config: grid, t0, dprime, allow_extrapolation, covariance.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        t0: Option<f64>,
        /// Reproduce polynomials of degree at most d'.
        #[arg(long)]
        dprime: Option<usize>,
        /// Overrides the epsilon of an experiment covariance.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variance ratio sweep as CSV `experiment,epsilon,t0,dprime,rho`.
    Rho {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Experiment id (1 or 2); repeatable, defaults to both.
        #[arg(long = "experiment", value_delimiter = ',')]
        experiments: Vec<u8>,
        /// Comma-separated epsilons; defaults to the 40-point log grid.
        #[arg(long = "epsilon", value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long = "t0", value_delimiter = ',')]
        t0s: Vec<f64>,
        #[arg(long = "dprime", value_delimiter = ',')]
        dprimes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Star-curve smoothing study.
    Star {
        #[arg(long, value_enum)]
        variant: VariantArg,
        #[arg(long, default_value_t = CANONICAL_SEED)]
        seed: u64,
        /// Sample CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary; defaults to `<out>.summary.json`, or stderr without `--out`.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Refine a periodic sequence with minimum-variance rules.
    Subdivide {
        /// Sequence CSV `index,value[,value2]`.
        #[arg(long)]
        input: PathBuf,
        /// JSON config: levels, n, dprime, covariance, span.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        levels: Option<usize>,
        /// Half-width of the 2n-point stencil.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        dprime: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Exp1,
    Exp2,
}

impl From<VariantArg> for StarVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Exp1 => StarVariant::Exp1Noise,
            VariantArg::Exp2 => StarVariant::Exp2Noise,
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveOutput {
    grid: Vec<f64>,
    t0: f64,
    dprime: usize,
    route: Route,
    coefficients: Vec<f64>,
    variance: f64,
    kernel_residual: f64,
    reproduction_residual: f64,
    cross_route_deviation: Option<f64>,
    condition_estimate: f64,
    ill_conditioned: bool,
}

#[derive(Debug, Serialize)]
struct StarSummary {
    seed: u64,
    variant: StarVariant,
    mse_mv: f64,
    mse_avg: f64,
}

fn config_dir(path: &Option<PathBuf>) -> Option<&Path> {
    path.as_deref().and_then(Path::parent)
}

fn require<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("missing `{name}` (flag or config field)")))
}

fn cmd_solve(
    config: Option<PathBuf>,
    t0: Option<f64>,
    dprime: Option<usize>,
    epsilon: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = match &config {
        Some(p) => config::load::<SolveConfig>(p)?,
        None => SolveConfig::default(),
    };
    let t0 = require(t0.or(cfg.t0), "t0")?;
    let dprime = require(dprime.or(cfg.dprime), "dprime")?;
    let grid = Grid::new(cfg.grid_points())?;
    let cov = cfg
        .covariance
        .build(grid.len(), epsilon, config_dir(&config))?;
    if cov.dim() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: cov.dim(),
        }
        .into());
    }
    let setting = make_setting(grid, t0, dprime + 1, cfg.allow_extrapolation)?;
    let report = solve_all_routes(&setting, &cov)?;
    let output = SolveOutput {
        grid: setting.grid().points().to_vec(),
        t0,
        dprime,
        route: report.route,
        coefficients: report.coefficients().iter().copied().collect(),
        variance: report.variance(),
        kernel_residual: report.residuals.kernel,
        reproduction_residual: report.residuals.reproduction,
        cross_route_deviation: report.residuals.cross_route,
        condition_estimate: report.condition_estimate,
        ill_conditioned: report.ill_conditioned,
    };
    if report.ill_conditioned {
        eprintln!(
            "warning: condition estimate {:.3e} exceeds the ill-conditioning threshold",
            report.condition_estimate
        );
    }
    let mut text =
        serde_json::to_string_pretty(&output).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    emit(out.as_deref(), &text)
}

/// Flag values win over config values; an empty flag list means "not given".
fn pick<T>(flag: Vec<T>, file: Option<Vec<T>>) -> Option<Vec<T>> {
    if flag.is_empty() {
        file
    } else {
        Some(flag)
    }
}

fn cmd_rho(
    config: Option<PathBuf>,
    experiments: Vec<u8>,
    epsilons: Vec<f64>,
    t0s: Vec<f64>,
    dprimes: Vec<usize>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = match &config {
        Some(p) => Some(config::load::<RhoConfig>(p)?),
        None => None,
    };
    let experiments = pick(
        experiments,
        cfg.as_ref().and_then(|c| c.experiments.clone()),
    )
    .unwrap_or(vec![1, 2]);
    let epsilons = pick(epsilons, cfg.as_ref().and_then(|c| c.epsilons.clone()));
    let t0s = pick(t0s, cfg.as_ref().and_then(|c| c.t0s.clone())).unwrap_or(DEFAULT_T0S.to_vec());
    let dprimes = pick(dprimes, cfg.as_ref().and_then(|c| c.dprimes.clone()))
        .unwrap_or(DEFAULT_DPRIMES.to_vec());

    let mut ids = experiments;
    ids.sort_unstable();
    ids.dedup();
    let mut t0s = t0s;
    t0s.sort_by(f64::total_cmp);
    t0s.dedup();
    let mut dprimes = dprimes;
    dprimes.sort_unstable();
    dprimes.dedup();
    let mut text = String::from("experiment,epsilon,t0,dprime,rho\n");
    for id in ids {
        let exp = Experiment::from_id(id).ok_or_else(|| {
            CliError::Usage(format!("unknown experiment id {id} (expected 1 or 2)"))
        })?;
        let (lo, hi) = exp.epsilon_range();
        let eps: Vec<f64> = match &epsilons {
            None => exp.default_epsilons(),
            Some(list) => list
                .iter()
                .copied()
                .filter(|&e| {
                    let inside = e > lo && e < hi;
                    if !inside {
                        eprintln!("warning: skipping epsilon {e} outside ({lo}, {hi}) for experiment {id}");
                    }
                    inside
                })
                .collect(),
        };
        for rec in rho_sweep(exp, &eps, &t0s, &dprimes)? {
            writeln!(
                text,
                "{},{},{},{},{}",
                rec.experiment,
                fmt_f64(rec.epsilon),
                fmt_f64(rec.t0),
                rec.dprime,
                fmt_f64(rec.rho)
            )
            .expect("writing to a String");
        }
    }
    emit(out.as_deref(), &text)
}

fn cmd_star(
    variant: VariantArg,
    seed: u64,
    out: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Result<(), CliError> {
    let run = run_star(variant.into(), seed)?;
    let mut csv = String::from("i,t,truth_x,truth_y,noisy_x,noisy_y,mv_x,mv_y,avg_x,avg_y\n");
    for i in 0..run.t.len() {
        let row = [
            run.t[i],
            run.truth[0][i],
            run.truth[1][i],
            run.noisy[0][i],
            run.noisy[1][i],
            run.refined_mv[0][i],
            run.refined_mv[1][i],
            run.refined_avg[0][i],
            run.refined_avg[1][i],
        ];
        write!(csv, "{i}").expect("writing to a String");
        for v in row {
            write!(csv, ",{}", fmt_f64(v)).expect("writing to a String");
        }
        csv.push('\n');
    }
    let summary_json = serde_json::to_string_pretty(&StarSummary {
        seed,
        variant: run.variant,
        mse_mv: run.mse_mv,
        mse_avg: run.mse_avg,
    })
    .map_err(|e| CliError::Output(e.to_string()))?
        + "\n";

    emit(out.as_deref(), &csv)?;
    let summary = summary.or_else(|| out.as_ref().map(|p| p.with_extension("summary.json")));
    match summary {
        Some(path) => emit(Some(&path), &summary_json),
        None => {
            eprint!("{summary_json}");
            Ok(())
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_subdivide(
    input: PathBuf,
    config: Option<PathBuf>,
    levels: Option<usize>,
    n: Option<usize>,
    dprime: Option<usize>,
    epsilon: Option<f64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let cfg = match &config {
        Some(p) => config::load::<SubdivideConfig>(p)?,
        None => SubdivideConfig::default(),
    };
    let levels = levels.or(cfg.levels).unwrap_or(3);
    if levels > MAX_LEVELS {
        return Err(CliError::Usage(format!(
            "levels must be at most {MAX_LEVELS}, got {levels}"
        )));
    }
    let n = n.or(cfg.n).unwrap_or(2);
    let dprime = dprime.or(cfg.dprime).unwrap_or(1);
    if n == 0 {
        return Err(CliError::Usage("n must be at least 1".into()));
    }

    let columns = io::read_sequence_csv(&input)?;
    let m = columns[0].len();
    let span = cfg.span.unwrap_or(m as f64);
    let seq = PeriodicSequence::new(columns, span)?;
    let cov = cfg.covariance.build(2 * n, epsilon, config_dir(&config))?;
    let scheme = SchemeConfig::new(n, dprime + 1, CovarianceProvider::Uniform(cov))?;
    let refined = refine(&seq, &scheme, levels)?;

    let width = seq.components().len();
    let mut text = String::from("level,index,value");
    if width == 2 {
        text.push_str(",value2");
    }
    text.push('\n');
    for (level, s) in std::iter::once(&seq).chain(refined.iter()).enumerate() {
        for i in 0..s.len() {
            write!(text, "{level},{i}").expect("writing to a String");
            for c in s.components() {
                write!(text, ",{}", fmt_f64(c[i])).expect("writing to a String");
            }
            text.push('\n');
        }
    }
    emit(out.as_deref(), &text)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t >= 1).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Solve {
            config,
            t0,
            dprime,
            epsilon,
            out,
        } => cmd_solve(config, t0, dprime, epsilon, out),
        Command::Rho {
            config,
            experiments,
            epsilons,
            t0s,
            dprimes,
            out,
        } => cmd_rho(config, experiments, epsilons, t0s, dprimes, out),
        Command::Star {
            variant,
            seed,
            out,
            summary,
        } => cmd_star(variant, seed, out, summary),
        Command::Subdivide {
            input,
            config,
            levels,
            n,
            dprime,
            epsilon,
            out,
        } => cmd_subdivide(input, config, levels, n, dprime, epsilon, out),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
