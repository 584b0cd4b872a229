//! Photon-level simulation of both measurement channels.
//!
//! Every repetition owns its own ChaCha8 stream (`seed`, stream = repetition
//! index), so results do not depend on how repetitions are spread across
//! threads.

use std::time::Duration;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Geometric;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::direct_imaging::{di_target_crb, DiInfluence};
use crate::error::{Error, Result};
use crate::estimator::EstimatorTarget;
use crate::optics::{beam_width, defocus_ratio, OpticalConfig};
use crate::quantum_bounds::quantum_bound_target;
use crate::spade::{mode_truncation, spade_target_crb, ModeHistogram, SpadeInfluence, MODE_TAIL_TOLERANCE};
use crate::sources::SourceDistribution;

/// Below this many repetitions the variance estimate is flagged low-confidence.
pub const LOW_CONFIDENCE_REPETITIONS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    DirectImaging,
    Spade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub distribution: SourceDistribution,
    pub optics: OpticalConfig,
    pub channel: Channel,
    pub photons_per_run: u64,
    pub repetitions: u64,
    pub seed: u64,
    pub estimator_target: EstimatorTarget,
    /// Pilot reference `F₀` for the influence function. `None` linearizes
    /// around the true distribution.
    pub reference: Option<SourceDistribution>,
}

impl ExperimentConfig {
    pub fn new(distribution: SourceDistribution, optics: OpticalConfig, channel: Channel) -> Self {
        Self {
            distribution,
            optics,
            channel,
            photons_per_run: 1_000_000,
            repetitions: 200,
            seed: 0,
            estimator_target: EstimatorTarget::Roughness,
            reference: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.photons_per_run == 0 {
            return Err(Error::InvalidArgument("photons_per_run must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidArgument("repetitions must be at least 1".into()));
        }
        Ok(())
    }

    pub fn reference_distribution(&self) -> &SourceDistribution {
        self.reference.as_ref().unwrap_or(&self.distribution)
    }
}

/// Draws source positions with probability equal to their weights.
#[derive(Debug, Clone)]
pub struct SourceSampler {
    positions: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl SourceSampler {
    pub fn new(dist: &SourceDistribution) -> Self {
        Self {
            positions: dist.positions().to_vec(),
            index: WeightedIndex::new(dist.weights()).expect("validated weights"),
        }
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.positions.len() == 1 {
            0
        } else {
            self.index.sample(rng)
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.positions[self.sample_index(rng)]
    }
}

pub fn sample_source<R: Rng + ?Sized>(dist: &SourceDistribution, rng: &mut R) -> f64 {
    SourceSampler::new(dist).sample(rng)
}

/// Radial detection position by inverse CDF, `r = ω(z)√(−ln u / 2)`.
pub fn sample_di_photon<R: Rng + ?Sized>(z: f64, cfg: &OpticalConfig, rng: &mut R) -> f64 {
    radial_from_uniform(beam_width(z, cfg), rng.random::<f64>())
}

#[inline]
fn radial_from_uniform(width: f64, u: f64) -> f64 {
    // u ∈ [0, 1) → 1 − u ∈ (0, 1]
    width * (-(1.0 - u).ln() / 2.0).sqrt()
}

/// Laguerre-Gauss mode index, geometric with ratio `ξ(z)`.
pub fn sample_spade_photon<R: Rng + ?Sized>(z: f64, cfg: &OpticalConfig, rng: &mut R) -> u64 {
    mode_sampler(z, cfg).sample(rng)
}

fn mode_sampler(z: f64, cfg: &OpticalConfig) -> Geometric {
    Geometric::new(1.0 - defocus_ratio(z, cfg)).expect("ξ ∈ [0, 1)")
}

/// Deterministic RNG for one repetition.
pub fn repetition_rng(seed: u64, repetition: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(repetition);
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub config: ExperimentConfig,
    /// `"oracle-local"` when the influence function is linearized around the
    /// true distribution, `"pilot"` otherwise.
    pub reference_mode: &'static str,
    pub true_value: f64,
    pub flags: Vec<String>,
    /// SPADE only: mode cutoff with tail mass below 1e-14.
    pub mode_truncation: Option<usize>,
    /// SPADE only: photons observed above `mode_truncation`.
    pub modes_beyond_truncation: Option<u64>,
    pub max_mode_index: Option<usize>,
    /// Excluded from serialized output so identical runs write identical files.
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub estimates: Vec<f64>,
    pub empirical_mean: f64,
    /// `mean − true value`; reported, never thresholded.
    pub bias: f64,
    /// `m · Var(β̂)` with the unbiased variance over repetitions.
    pub empirical_rescaled_variance: f64,
    pub analytic_crb: f64,
    pub quantum_bound: f64,
    /// `empirical_rescaled_variance / analytic_crb`.
    pub ratio: f64,
    pub metadata: RunMetadata,
}

enum Estimator {
    Direct(DiInfluence),
    Spade(SpadeInfluence),
}

struct Repetition {
    estimate: f64,
    histogram: Option<ModeHistogram>,
}

fn run_repetition(
    config: &ExperimentConfig,
    estimator: &Estimator,
    sources: &SourceSampler,
    repetition: u64,
) -> Repetition {
    let mut rng = repetition_rng(config.seed, repetition);
    let m = config.photons_per_run;
    let cfg = &config.optics;
    match estimator {
        Estimator::Direct(inf) => {
            let widths: Vec<f64> = config
                .distribution
                .positions()
                .iter()
                .map(|&z| beam_width(z, cfg))
                .collect();
            let mut sum = 0.0;
            for _ in 0..m {
                let w = widths[sources.sample_index(&mut rng)];
                sum += inf.eval(radial_from_uniform(w, rng.random::<f64>()));
            }
            Repetition {
                estimate: inf.finish(sum / m as f64),
                histogram: None,
            }
        }
        Estimator::Spade(inf) => {
            let modes: Vec<Geometric> = config
                .distribution
                .positions()
                .iter()
                .map(|&z| mode_sampler(z, cfg))
                .collect();
            let mut hist = ModeHistogram::new();
            for _ in 0..m {
                hist.record(modes[sources.sample_index(&mut rng)].sample(&mut rng));
            }
            Repetition {
                estimate: inf.estimate(&hist).expect("m ≥ 1 photons recorded"),
                histogram: Some(hist),
            }
        }
    }
}

fn true_value(dist: &SourceDistribution, target: EstimatorTarget) -> f64 {
    match target {
        EstimatorTarget::Roughness | EstimatorTarget::RoughnessPlugin => dist.roughness(),
        EstimatorTarget::Theta2 => dist.axial_moment(2),
        EstimatorTarget::MeanHeight => dist.mean(),
    }
}

/// Wall clock for run metadata. wasm32-unknown-unknown has no clock, so
/// runs there report zero.
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
struct Stopwatch(std::time::Instant);

#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
impl Stopwatch {
    fn start() -> Self {
        Self(std::time::Instant::now())
    }

    fn elapsed(&self) -> Duration {
        self.0.elapsed()
    }
}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
struct Stopwatch;

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
impl Stopwatch {
    fn start() -> Self {
        Self
    }

    fn elapsed(&self) -> Duration {
        Duration::ZERO
    }
}

/// Runs the experiment on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let start = Stopwatch::start();
    config.validate()?;
    let reference = config.reference_distribution();
    let cfg = &config.optics;
    let target = config.estimator_target;
    let estimator = match config.channel {
        Channel::DirectImaging => DiInfluence::new(reference, cfg, target).map(Estimator::Direct),
        Channel::Spade => SpadeInfluence::new(reference, cfg, target).map(Estimator::Spade),
    }
    .map_err(|e| Error::Estimator(Box::new(e)))?;
    let analytic_crb = match config.channel {
        Channel::DirectImaging => di_target_crb(&config.distribution, cfg, target),
        Channel::Spade => spade_target_crb(&config.distribution, cfg, target),
    }
    .map_err(|e| Error::Estimator(Box::new(e)))?;
    let quantum_bound = quantum_bound_target(&config.distribution, cfg, target)
        .map_err(|e| Error::Estimator(Box::new(e)))?;

    let sources = SourceSampler::new(&config.distribution);
    let reps: Vec<Repetition> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run_repetition(config, &estimator, &sources, rep))
        .collect();

    let estimates: Vec<f64> = reps.iter().map(|r| r.estimate).collect();
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let mut flags = Vec::new();
    let variance = if estimates.len() < 2 {
        flags.push("insufficient repetitions".to_string());
        0.0
    } else {
        estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
    };
    if config.repetitions < LOW_CONFIDENCE_REPETITIONS {
        flags.push("low confidence".to_string());
    }
    let rescaled = config.photons_per_run as f64 * variance;

    let (mode_cut, beyond, max_mode) = match config.channel {
        Channel::Spade => {
            let cut = mode_truncation(&config.distribution, cfg, MODE_TAIL_TOLERANCE);
            let mut total = ModeHistogram::new();
            for h in reps.iter().filter_map(|r| r.histogram.as_ref()) {
                total.merge(h);
            }
            let beyond = total.beyond(cut);
            if beyond > 0 {
                flags.push(format!("{beyond} photons above mode truncation {cut}"));
            }
            (Some(cut), Some(beyond), Some(total.counts().len().saturating_sub(1)))
        }
        Channel::DirectImaging => (None, None, None),
    };

    let truth = true_value(&config.distribution, target);
    Ok(ExperimentResult {
        bias: mean - truth,
        empirical_mean: mean,
        empirical_rescaled_variance: rescaled,
        analytic_crb,
        quantum_bound,
        ratio: rescaled / analytic_crb,
        estimates,
        metadata: RunMetadata {
            config: config.clone(),
            reference_mode: if config.reference.is_some() { "pilot" } else { "oracle-local" },
            true_value: truth,
            flags,
            mode_truncation: mode_cut,
            modes_beyond_truncation: beyond,
            max_mode_index: max_mode,
            wall_time: start.elapsed(),
        },
    })
}

/// Runs the experiment on a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_experiment(config))
}
