//! JSON run configuration: parsing, flag overrides and validation.
//!
//! Precedence is flags > file > defaults. The resolved [`RunConfig`] is
//! embedded in every JSON output and parses back as a config file.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use roughness::{Channel, EstimatorTarget, ExperimentConfig, OpticalConfig, SourceDistribution};

use crate::error::{CliError, Result};

/// Largest transfer-matrix order `matrices` accepts; factorials and powers of
/// `z_R` overflow f64 soon after.
pub const MAX_TRUNCATION: usize = 64;

pub const DEFAULT_PHOTONS: u64 = 1_000_000;
pub const DEFAULT_REPETITIONS: u64 = 200;
pub const DEFAULT_TRUNCATION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bounds,
    Matrices,
    Simulate,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanAxis {
    /// Half-separation `s` of a symmetric pair at `±s`.
    Separation,
    /// Photons per run; only the empirical columns change.
    Photons,
    /// Rayleigh range, with positions rescaled so `z/z_R` stays fixed.
    RayleighRange,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub axis: ScanAxis,
    pub values: Vec<f64>,
    /// Run a simulation per grid point. Defaults to true on the photons axis.
    #[serde(default)]
    pub simulate: Option<bool>,
}

impl ScanSpec {
    pub fn simulates(&self) -> bool {
        self.simulate.unwrap_or(self.axis == ScanAxis::Photons)
    }
}

/// Config file contents; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub command: Option<Command>,
    pub optics: Option<OpticalConfig>,
    pub distribution: Option<SourceDistribution>,
    pub channel: Option<Channel>,
    pub photons_per_run: Option<u64>,
    pub repetitions: Option<u64>,
    pub truncation: Option<usize>,
    pub seed: Option<u64>,
    pub target: Option<EstimatorTarget>,
    pub reference: Option<SourceDistribution>,
    pub scan: Option<ScanSpec>,
    pub format: Option<OutputFormat>,
}

/// Command-line values that override the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub format: Option<OutputFormat>,
}

/// Fully resolved configuration with defaults filled in.
///
/// Thread count and output path are deliberately absent: they never change
/// results, and leaving them out keeps outputs byte-identical across them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub optics: OpticalConfig,
    pub distribution: SourceDistribution,
    pub channel: Channel,
    pub photons_per_run: u64,
    pub repetitions: u64,
    pub truncation: usize,
    pub seed: u64,
    pub target: EstimatorTarget,
    pub reference: Option<SourceDistribution>,
    pub scan: Option<ScanSpec>,
    pub format: OutputFormat,
}

/// Parses a config document, reporting failures with a JSON pointer.
pub fn parse_config(text: &str) -> Result<FileConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        CliError::Validation(format!("config error at {pointer}: {}", e.inner()))
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } | Segment::Enum { variant: key } => {
                out.push_str(&key.replace('~', "~0").replace('/', "~1"))
            }
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Reads a config from a path, or from stdin when the path is `-`.
pub fn load_config(path: &Path) -> Result<FileConfig> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        s
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?
    };
    parse_config(&text)
}

impl RunConfig {
    pub fn resolve(command: Command, file: FileConfig, flags: Overrides) -> Result<Self> {
        let distribution = file.distribution.ok_or_else(|| {
            CliError::Validation("config error at /distribution: a source distribution is required".into())
        })?;
        let cfg = RunConfig {
            command,
            optics: file.optics.unwrap_or_default(),
            distribution,
            channel: file.channel.unwrap_or(Channel::Spade),
            photons_per_run: file.photons_per_run.unwrap_or(DEFAULT_PHOTONS),
            repetitions: file.repetitions.unwrap_or(DEFAULT_REPETITIONS),
            truncation: file.truncation.unwrap_or(DEFAULT_TRUNCATION),
            seed: flags.seed.or(file.seed).unwrap_or(0),
            target: file.target.unwrap_or_default(),
            reference: file.reference,
            scan: file.scan.map(|mut s| {
                s.simulate = Some(s.simulates());
                s
            }),
            format: flags.format.or(file.format).unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(CliError::Validation(msg));
        if self.format == OutputFormat::Csv && !matches!(self.command, Command::Scan | Command::Simulate) {
            return invalid("csv output is only available for scan and simulate".into());
        }
        if self.command == Command::Matrices && self.truncation > MAX_TRUNCATION {
            return invalid(format!(
                "truncation {} exceeds {MAX_TRUNCATION}; larger transfer matrices overflow f64",
                self.truncation
            ));
        }
        if matches!(self.command, Command::Simulate | Command::Scan) {
            self.experiment().validate()?;
        }
        if self.command == Command::Scan {
            let Some(scan) = &self.scan else {
                return invalid("config error at /scan: scan needs an axis and values".into());
            };
            validate_grid(scan)?;
        }
        Ok(())
    }

    /// Simulation settings for the base configuration.
    pub fn experiment(&self) -> ExperimentConfig {
        let mut e = ExperimentConfig::new(self.distribution.clone(), self.optics, self.channel);
        e.photons_per_run = self.photons_per_run;
        e.repetitions = self.repetitions;
        e.seed = self.seed;
        e.estimator_target = self.target;
        e.reference = self.reference.clone();
        e
    }
}

fn validate_grid(scan: &ScanSpec) -> Result<()> {
    let v = &scan.values;
    let fail = |msg: &str| Err(CliError::Validation(format!("config error at /scan/values: {msg}")));
    if v.len() < 2 {
        return fail("a scan grid needs at least 2 points");
    }
    if v.iter().any(|x| !x.is_finite()) {
        return fail("grid values must be finite");
    }
    let increasing = v.windows(2).all(|w| w[1] > w[0]);
    let decreasing = v.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) {
        return fail("grid must be strictly monotone");
    }
    match scan.axis {
        ScanAxis::Separation if v.iter().any(|x| *x < 0.0) => fail("separations must be nonnegative"),
        ScanAxis::RayleighRange if v.iter().any(|x| *x <= 0.0) => fail("Rayleigh ranges must be positive"),
        ScanAxis::Photons if v.iter().any(|x| *x < 1.0 || x.fract() != 0.0) => {
            fail("photon counts must be positive integers")
        }
        _ => Ok(()),
    }
}
