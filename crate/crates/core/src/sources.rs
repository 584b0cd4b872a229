//! Discrete axial source distributions and the moment vectors they induce
//! in object space, on the direct-imaging plane and across SPADE modes.

use serde::{Deserialize, Serialize};

use crate::direct_imaging;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;
use crate::optics::{self, OpticalConfig};

/// Default truncation order for moment vectors.
pub const DEFAULT_TRUNCATION: usize = 20;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Incoherent point sources at axial positions `z_i` with relative
/// intensities `p_i` (nonnegative, summing to one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec")]
pub struct SourceDistribution {
    positions: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DistributionSpec {
    positions: Vec<f64>,
    weights: Vec<f64>,
}

impl TryFrom<DistributionSpec> for SourceDistribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        SourceDistribution::new(spec.positions, spec.weights)
    }
}

impl SourceDistribution {
    pub fn new(positions: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidDistribution("no sources given".into()));
        }
        if positions.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(z) = positions.iter().find(|z| !z.is_finite()) {
            return Err(Error::InvalidDistribution(format!("non-finite position {z}")));
        }
        if let Some(p) = weights.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("invalid weight {p}")));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { positions, weights })
    }

    /// Equal-intensity sources at the given positions.
    pub fn uniform(positions: Vec<f64>) -> Result<Self> {
        let n = positions.len().max(1);
        let weights = vec![1.0 / n as f64; positions.len()];
        Self::new(positions, weights)
    }

    pub fn point(z: f64) -> Result<Self> {
        Self::new(vec![z], vec![1.0])
    }

    /// Two equal sources at `±half_separation`.
    pub fn symmetric_pair(half_separation: f64) -> Result<Self> {
        Self::new(vec![-half_separation, half_separation], vec![0.5, 0.5])
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn max_abs_position(&self) -> f64 {
        self.positions.iter().fold(0.0, |m, z| m.max(z.abs()))
    }

    pub fn translated(&self, offset: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|z| z + offset).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            positions: self.positions.iter().map(|z| z * factor).collect(),
            weights: self.weights.clone(),
        }
    }

    /// `θ_l = Σ p_i z_i^l`.
    pub fn axial_moment(&self, order: u32) -> f64 {
        if order == 0 {
            return 1.0;
        }
        compensated_sum(self.iter().map(|(z, p)| p * z.powi(order as i32)))
    }

    pub fn mean(&self) -> f64 {
        self.axial_moment(1)
    }

    /// Root-mean-square roughness `σ = √(θ₂ − θ₁²)`, evaluated as a
    /// central moment so it stays translation invariant in floating point.
    pub fn roughness(&self) -> f64 {
        let mu = self.mean();
        compensated_sum(self.iter().map(|(z, p)| p * (z - mu) * (z - mu)))
            .max(0.0)
            .sqrt()
    }

    /// Even object moments `θ_{2k}` for `k = 0..=order`.
    pub fn even_moments(&self, order: usize) -> MomentVector {
        let values = (0..=order).map(|k| self.axial_moment(2 * k as u32)).collect();
        MomentVector {
            kind: MomentKind::ObjectTheta,
            values,
            order,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentKind {
    /// Even object-plane moments `θ_{2k}`.
    ObjectTheta,
    /// Even image-plane moments `φ_{2j}` of the direct-imaging intensity.
    ImagePhi,
    /// SPADE mode intensities `f_q`.
    ModeF,
}

/// A truncated moment or intensity vector; `values[k]` for `k = 0..=order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub kind: MomentKind,
    pub values: Vec<f64>,
    pub order: usize,
}

impl MomentVector {
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Image-plane moments `φ_{2j} = Σ_k C_{jk} θ_{2k}` for `j = 0..=order`.
pub fn image_moments_di(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    order: usize,
) -> MomentVector {
    let c = direct_imaging::c_matrix(cfg, order);
    let theta = dist.even_moments(order);
    let values = (0..=order)
        .map(|j| compensated_sum((0..=j).map(|k| c[(j, k)] * theta.values[k])))
        .collect();
    MomentVector {
        kind: MomentKind::ImagePhi,
        values,
        order,
    }
}

/// Mode intensities `f_q = Σ_i p_i H(q; z_i)` for `q = 0..=order`.
pub fn mode_intensities_spade(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    order: usize,
) -> MomentVector {
    let values = (0..=order as u64)
        .map(|q| compensated_sum(dist.iter().map(|(z, p)| p * optics::mode_overlap_prob(q, z, cfg))))
        .collect();
    MomentVector {
        kind: MomentKind::ModeF,
        values,
        order,
    }
}

/// Probability mass beyond mode `order`: `Σ_i p_i ξ_i^{order+1}`.
pub fn mode_tail_mass(dist: &SourceDistribution, cfg: &OpticalConfig, order: usize) -> f64 {
    compensated_sum(
        dist.iter()
            .map(|(z, p)| p * optics::defocus_ratio(z, cfg).powi(order as i32 + 1)),
    )
}
