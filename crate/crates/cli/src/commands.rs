//! The four subcommands. Each returns the document to write plus an optional
//! one-line summary for stderr.

use nalgebra::DMatrix;
use serde::Serialize;

use roughness::direct_imaging::{c_inverse, c_matrix, di_roughness_crb};
use roughness::montecarlo::{run_experiment, run_experiment_with_threads};
use roughness::numeric::identity_residual;
use roughness::quantum_bounds::{quantum_bound_mean, quantum_bound_roughness};
use roughness::report::row_major;
use roughness::spade::{spade_roughness_crb, w_inverse, w_matrix};
use roughness::{Channel, Error, ExperimentConfig, ExperimentResult, OpticalConfig, SourceDistribution};

use crate::config::{Command, OutputFormat, RunConfig, ScanAxis};
use crate::error::{CliError, Result};
use crate::table::{format_sig, write_csv, RowStatus, ScanRow};

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub summary: Option<String>,
}

/// Unit convention echoed in every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct Units {
    pub length: &'static str,
    pub omega0: f64,
    pub rayleigh_range: f64,
    pub variance: &'static str,
}

impl Units {
    pub fn new(optics: &OpticalConfig) -> Self {
        Units {
            length: "omega0",
            omega0: optics.omega0(),
            rayleigh_range: optics.rayleigh_range(),
            variance: "length^2, rescaled by photons per run",
        }
    }
}

/// Dispatches on `config.command`. `threads` caps the simulation pool.
pub fn run(config: &RunConfig, threads: Option<usize>) -> Result<Output> {
    match config.command {
        Command::Bounds => cmd_bounds(config),
        Command::Matrices => cmd_matrices(config),
        Command::Simulate => cmd_simulate(config, threads),
        Command::Scan => cmd_scan(config, threads),
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct QuantumBounds {
    pub mean: f64,
    pub roughness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoughnessBound {
    pub roughness: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport<'a> {
    pub run_config: &'a RunConfig,
    pub units: Units,
    pub quantum: QuantumBounds,
    pub direct_imaging: RoughnessBound,
    pub spade: RoughnessBound,
}

pub fn cmd_bounds(config: &RunConfig) -> Result<Output> {
    let (dist, optics) = (&config.distribution, &config.optics);
    let report = BoundsReport {
        run_config: config,
        units: Units::new(optics),
        quantum: QuantumBounds {
            mean: quantum_bound_mean(optics),
            roughness: quantum_bound_roughness(dist, optics)?,
        },
        direct_imaging: RoughnessBound { roughness: di_roughness_crb(dist, optics)? },
        spade: RoughnessBound { roughness: spade_roughness_crb(dist, optics)? },
    };
    Ok(Output { body: to_json(&report)?, summary: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct Residuals {
    pub c: f64,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatricesReport<'a> {
    pub run_config: &'a RunConfig,
    pub units: Units,
    pub order: usize,
    #[serde(serialize_with = "row_major")]
    pub c_matrix: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub c_inverse: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub w_matrix: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub w_inverse: DMatrix<f64>,
    /// Max-abs entry of `A·A⁻¹ − I`.
    pub residuals: Residuals,
}

pub fn matrices_report(config: &RunConfig) -> MatricesReport<'_> {
    let (k, optics) = (config.truncation, &config.optics);
    let c = c_matrix(optics, k);
    let ci = c_inverse(optics, k);
    let w = w_matrix(optics, k);
    let wi = w_inverse(optics, k);
    MatricesReport {
        run_config: config,
        units: Units::new(optics),
        order: k,
        residuals: Residuals {
            c: identity_residual(&c, &ci),
            w: identity_residual(&w, &wi),
        },
        c_matrix: c,
        c_inverse: ci,
        w_matrix: w,
        w_inverse: wi,
    }
}

pub fn cmd_matrices(config: &RunConfig) -> Result<Output> {
    let report = matrices_report(config);
    let summary = format!(
        "K={} |CC^-1 - I|={:e} |WW^-1 - I|={:e}",
        report.order, report.residuals.c, report.residuals.w
    );
    Ok(Output { body: to_json(&report)?, summary: Some(summary) })
}

fn simulate(experiment: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentResult> {
    let result = match threads {
        Some(n) => run_experiment_with_threads(experiment, n),
        None => run_experiment(experiment),
    };
    Ok(result?)
}

fn channel_name(c: Channel) -> &'static str {
    match c {
        Channel::DirectImaging => "direct-imaging",
        Channel::Spade => "spade",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateReport<'a> {
    pub run_config: &'a RunConfig,
    pub units: Units,
    pub result: ExperimentResult,
}

pub fn cmd_simulate(config: &RunConfig, threads: Option<usize>) -> Result<Output> {
    let result = simulate(&config.experiment(), threads)?;
    let summary = format!(
        "channel={} m={} reps={} m*Var={} crb={} ratio={}",
        channel_name(config.channel),
        config.photons_per_run,
        config.repetitions,
        format_sig(result.empirical_rescaled_variance),
        format_sig(result.analytic_crb),
        format_sig(result.ratio),
    );
    let body = match config.format {
        OutputFormat::Json => to_json(&SimulateReport {
            run_config: config,
            units: Units::new(&config.optics),
            result,
        })?,
        OutputFormat::Csv => {
            let mut s = String::from("repetition,estimate\n");
            for (i, e) in result.estimates.iter().enumerate() {
                s.push_str(&format!("{i},{}\n", format_sig(*e)));
            }
            s
        }
    };
    Ok(Output { body, summary: Some(summary) })
}

/// Distribution and optics at one grid point.
fn grid_point(config: &RunConfig, axis: ScanAxis, value: f64) -> Result<(SourceDistribution, OpticalConfig)> {
    Ok(match axis {
        ScanAxis::Separation => (SourceDistribution::symmetric_pair(value)?, config.optics),
        ScanAxis::Photons => (config.distribution.clone(), config.optics),
        ScanAxis::RayleighRange => {
            let optics = OpticalConfig::new(config.optics.omega0(), value)?;
            let dist = config.distribution.scaled(value / config.optics.rayleigh_range());
            (dist, optics)
        }
    })
}

fn is_singular(e: &Error) -> bool {
    match e {
        Error::SingularParametrization(_) => true,
        Error::Estimator(inner) => is_singular(inner),
        _ => false,
    }
}

/// Evaluates the scan grid; rows at `σ = 0` are flagged instead of aborting.
pub fn scan_rows(config: &RunConfig, threads: Option<usize>) -> Result<Vec<ScanRow>> {
    let scan = config
        .scan
        .as_ref()
        .ok_or_else(|| CliError::Validation("config error at /scan: scan needs an axis and values".into()))?;
    let mut rows = Vec::with_capacity(scan.values.len());
    for &value in &scan.values {
        let (dist, optics) = grid_point(config, scan.axis, value)?;
        let bounds = (|| -> roughness::Result<_> {
            Ok((
                quantum_bound_roughness(&dist, &optics)?,
                spade_roughness_crb(&dist, &optics)?,
                di_roughness_crb(&dist, &optics)?,
            ))
        })();
        let (q, lg, di) = match bounds {
            Ok(b) => b,
            Err(e) if is_singular(&e) => {
                rows.push(ScanRow {
                    value,
                    quantum_roughness: None,
                    spade_roughness: None,
                    direct_imaging_roughness: None,
                    empirical_rescaled_variance: None,
                    empirical_ratio: None,
                    status: RowStatus::Divergent,
                });
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let (mut var, mut ratio) = (None, None);
        if scan.simulates() {
            let mut experiment = config.experiment();
            experiment.distribution = dist;
            experiment.optics = optics;
            if scan.axis == ScanAxis::Photons {
                experiment.photons_per_run = value as u64;
            }
            let r = simulate(&experiment, threads)?;
            var = Some(r.empirical_rescaled_variance);
            ratio = Some(r.ratio);
        }
        rows.push(ScanRow {
            value,
            quantum_roughness: Some(q),
            spade_roughness: Some(lg),
            direct_imaging_roughness: Some(di),
            empirical_rescaled_variance: var,
            empirical_ratio: ratio,
            status: RowStatus::Ok,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport<'a> {
    pub run_config: &'a RunConfig,
    pub units: Units,
    pub rows: Vec<ScanRow>,
}

pub fn cmd_scan(config: &RunConfig, threads: Option<usize>) -> Result<Output> {
    let rows = scan_rows(config, threads)?;
    let divergent = rows.iter().filter(|r| r.status == RowStatus::Divergent).count();
    let summary = format!("{} grid points, {divergent} divergent", rows.len());
    let body = match config.format {
        OutputFormat::Csv => write_csv(&rows)?,
        OutputFormat::Json => to_json(&ScanReport {
            run_config: config,
            units: Units::new(&config.optics),
            rows,
        })?,
    };
    Ok(Output { body, summary: Some(summary) })
}
