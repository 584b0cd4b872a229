//! Precision limits for estimating the mean height and RMS roughness of
//! incoherent point sources displaced along the optical axis.
//!
//! - [`optics`]: Gaussian-beam PSF and Laguerre-Gauss mode overlaps.
//! - [`sources`]: discrete axial distributions and their moment vectors.
//! - [`quantum_bounds`]: quantum Fisher information and quantum limits.
//! - [`direct_imaging`] and [`spade`]: the two measurement channels, their
//!   moment transfer matrices, influence-function estimators and CRBs.
//! - [`montecarlo`]: photon-level simulation of either channel.
//!
//! Lengths are in units of the beam waist `ω₀` unless it is set explicitly.

pub mod direct_imaging;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod numeric;
pub mod optics;
pub mod quantum_bounds;
pub mod report;
pub mod sources;
pub mod spade;

pub use error::{Error, Result};
pub use estimator::EstimatorTarget;
pub use montecarlo::{Channel, ExperimentConfig, ExperimentResult};
pub use optics::OpticalConfig;
pub use sources::{MomentKind, MomentVector, SourceDistribution};
