//! Targets of the influence-function estimators and their local linearization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sources::SourceDistribution;

/// Relative tolerance on `|θ₁| / max|z_i|` for a distribution to count as centered.
pub const CENTERING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorTarget {
    /// σ through the linearized influence function around the reference.
    #[default]
    Roughness,
    /// σ̂ = √max(θ̂₂, 0) from the θ₂ estimate.
    RoughnessPlugin,
    Theta2,
    /// Neither channel sees odd moments; always rejected.
    #[serde(rename = "mean-height-noop")]
    MeanHeight,
}

/// `β ≈ β₀ + ∂βᵀ(θ − θ₀)` over the even-moment vector `θ = (θ₀, θ₂, θ₄, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedTarget {
    pub beta0: f64,
    /// Indexed by vector position: entry `k` multiplies `θ_{2k}`.
    pub gradient: Vec<f64>,
}

impl LinearizedTarget {
    /// Linearization of `target` about the reference distribution.
    ///
    /// The plug-in roughness form shares the θ₂ linearization.
    pub fn new(target: EstimatorTarget, reference: &SourceDistribution) -> Result<Self> {
        match target {
            EstimatorTarget::Theta2 | EstimatorTarget::RoughnessPlugin => Ok(Self {
                beta0: reference.axial_moment(2),
                gradient: vec![0.0, 1.0],
            }),
            EstimatorTarget::Roughness => {
                let sigma = centered_roughness(reference)?;
                Ok(Self {
                    beta0: sigma,
                    gradient: vec![0.0, 1.0 / (2.0 * sigma)],
                })
            }
            EstimatorTarget::MeanHeight => Err(Error::Unidentifiable(
                "the mean height is an odd moment; direct imaging and SPADE only see even moments"
                    .into(),
            )),
        }
    }

    /// Final estimate from the averaged influence function.
    pub fn finish(&self, target: EstimatorTarget, mean_influence: f64) -> f64 {
        let linear = self.beta0 + mean_influence;
        match target {
            EstimatorTarget::RoughnessPlugin => linear.max(0.0).sqrt(),
            _ => linear,
        }
    }
}

/// σ of a centered distribution, rejecting `σ = 0` and `θ₁ ≠ 0`.
pub fn centered_roughness(dist: &SourceDistribution) -> Result<f64> {
    let sigma = dist.roughness();
    if sigma == 0.0 {
        return Err(Error::SingularParametrization(
            "roughness is zero, so dσ/dθ₂ = 1/(2σ) is undefined".into(),
        ));
    }
    let theta1 = dist.mean();
    if theta1.abs() > CENTERING_TOLERANCE * dist.max_abs_position() {
        return Err(Error::InvalidArgument(format!(
            "distribution must be centered (θ₁ = 0), got θ₁ = {theta1}"
        )));
    }
    Ok(sigma)
}
