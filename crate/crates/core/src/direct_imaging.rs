//! Direct imaging: the camera measures photon positions `r` on the image
//! plane. The even image moments are an invertible linear image of the even
//! object moments, `φ = Cθ`, and the influence function built from `C⁻¹`
//! gives a roughness CRB that grows as `1/σ²`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::{EstimatorTarget, LinearizedTarget};
use crate::numeric::{binomial, compensated_sum, factorial};
use crate::optics::OpticalConfig;
use crate::report::row_major;
use crate::sources::{image_moments_di, MomentKind, MomentVector, SourceDistribution};

/// Lower-triangular moment transfer matrix,
/// `[C]_{ij} = (i! ω₀^{2i} / 2^i) · binom(i, j) / z_R^{2j}`.
pub fn c_matrix(cfg: &OpticalConfig, order: usize) -> DMatrix<f64> {
    let w2 = cfg.omega0().powi(2);
    let inv_zr2 = cfg.rayleigh_range().powi(-2);
    // unit Rayleigh range first, then rescale columns
    let mut c = DMatrix::from_fn(order + 1, order + 1, |i, j| {
        if j > i {
            0.0
        } else {
            factorial(i as u64) * w2.powi(i as i32) / 2f64.powi(i as i32) * binomial(i as u64, j as u64)
        }
    });
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col *= inv_zr2.powi(j as i32);
    }
    c
}

/// Inverse of [`c_matrix`],
/// `[C⁻¹]_{ij} = (−1)^{i−j} binom(i, j) · 2^j / (j! ω₀^{2j}) · z_R^{2i}`.
///
/// Lower triangular, like `C`.
pub fn c_inverse(cfg: &OpticalConfig, order: usize) -> DMatrix<f64> {
    let w2 = cfg.omega0().powi(2);
    let zr2 = cfg.rayleigh_range().powi(2);
    let mut c = DMatrix::from_fn(order + 1, order + 1, |i, j| {
        if j > i {
            0.0
        } else {
            let sign = if (i - j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(i as u64, j as u64) * 2f64.powi(j as i32)
                / (factorial(j as u64) * w2.powi(j as i32))
        }
    });
    for (i, mut row) in c.row_iter_mut().enumerate() {
        row *= zr2.powi(i as i32);
    }
    c
}

/// Covariance of the image-plane power sums under the reference density,
/// `[U]_{ij} = φ_{2(i+j)} − φ_{2i} φ_{2j}` for `i, j = 0..=order`.
pub fn u_matrix(phi: &MomentVector, order: usize) -> Result<DMatrix<f64>> {
    if phi.kind != MomentKind::ImagePhi {
        return Err(Error::InvalidArgument(format!(
            "U needs image-plane moments, got {:?}",
            phi.kind
        )));
    }
    if phi.order < 2 * order {
        return Err(Error::InvalidArgument(format!(
            "U of order {order} needs image moments up to φ_{}, have up to φ_{}",
            4 * order,
            2 * phi.order
        )));
    }
    let v = &phi.values;
    let u = DMatrix::from_fn(order + 1, order + 1, |i, j| v[i + j] - v[i] * v[j]);
    Ok(u)
}

/// Moment CRB matrix `𝒱^DI_θ = C⁻¹ U C⁻ᵀ` over `θ₀, θ₂, …, θ_{2·order}`.
pub fn di_moment_crb(reference: &SourceDistribution, cfg: &OpticalConfig, order: usize) -> DMatrix<f64> {
    let phi = image_moments_di(reference, cfg, 2 * order);
    let u = u_matrix(&phi, order).expect("image moments computed to the required order");
    let cinv = c_inverse(cfg, order);
    let v = &cinv * u * cinv.transpose();
    // symmetrize away rounding in the triple product
    (&v + v.transpose()) * 0.5
}

/// Roughness CRB `𝒱^DI_σ = (z_R⁴ / (ω₀⁴ σ²)) (φ₄ − φ₂²)` for a centered reference.
pub fn di_roughness_crb(reference: &SourceDistribution, cfg: &OpticalConfig) -> Result<f64> {
    let lin = LinearizedTarget::new(EstimatorTarget::Roughness, reference)?;
    let v = di_moment_crb(reference, cfg, 1);
    Ok(quadratic_form(&lin.gradient, &v))
}

/// Direct-imaging CRB of `target` under the reference distribution.
pub fn di_target_crb(
    reference: &SourceDistribution,
    cfg: &OpticalConfig,
    target: EstimatorTarget,
) -> Result<f64> {
    let lin = match target {
        // asymptotically the plug-in form has the linearized variance
        EstimatorTarget::RoughnessPlugin => LinearizedTarget::new(EstimatorTarget::Roughness, reference)?,
        t => LinearizedTarget::new(t, reference)?,
    };
    let order = lin.gradient.len() - 1;
    Ok(quadratic_form(&lin.gradient, &di_moment_crb(reference, cfg, order)))
}

pub(crate) fn quadratic_form(g: &[f64], m: &DMatrix<f64>) -> f64 {
    compensated_sum(
        (0..g.len()).flat_map(|i| (0..g.len()).map(move |j| (i, j))).map(|(i, j)| g[i] * m[(i, j)] * g[j]),
    )
}

/// Influence function for a target of direct imaging,
/// `φ(r) = ∂βᵀC⁻¹𝕽(r) − ∂βᵀC⁻¹φ₀` with `𝕽_j = r^{2j}`.
#[derive(Debug, Clone)]
pub struct DiInfluence {
    target: EstimatorTarget,
    lin: LinearizedTarget,
    /// `(∂βᵀC⁻¹)_j`, multiplying `r^{2j}`.
    coefficients: Vec<f64>,
    offset: f64,
}

impl DiInfluence {
    pub fn new(
        reference: &SourceDistribution,
        cfg: &OpticalConfig,
        target: EstimatorTarget,
    ) -> Result<Self> {
        let lin = LinearizedTarget::new(target, reference)?;
        let order = lin.gradient.len() - 1;
        let cinv = c_inverse(cfg, order);
        let coefficients: Vec<f64> = (0..=order)
            .map(|j| compensated_sum((0..=order).map(|i| lin.gradient[i] * cinv[(i, j)])))
            .collect();
        let phi0 = image_moments_di(reference, cfg, order);
        let offset = compensated_sum(coefficients.iter().zip(&phi0.values).map(|(c, p)| c * p));
        Ok(Self {
            target,
            lin,
            coefficients,
            offset,
        })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r2 = r * r;
        let mut power = 1.0;
        let mut acc = 0.0;
        for c in &self.coefficients {
            acc += c * power;
            power *= r2;
        }
        acc - self.offset
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn reference_value(&self) -> f64 {
        self.lin.beta0
    }

    /// Estimate from the mean of the influence function over the detections.
    pub fn finish(&self, mean_influence: f64) -> f64 {
        self.lin.finish(self.target, mean_influence)
    }

    pub fn estimate(&self, samples: &[f64]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no detections to average".into()));
        }
        let mean = compensated_sum(samples.iter().map(|&r| self.eval(r))) / samples.len() as f64;
        Ok(self.finish(mean))
    }
}

/// `β̂ = β₀ + mean_m φ(r_m)` over radial detections `r_m`.
pub fn di_influence_estimate(
    samples: &[f64],
    reference: &SourceDistribution,
    cfg: &OpticalConfig,
    target: EstimatorTarget,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no detections to average".into()));
    }
    DiInfluence::new(reference, cfg, target)?.estimate(samples)
}

/// Direct-imaging matrices and CRBs for one reference distribution.
#[derive(Debug, Clone, Serialize)]
pub struct DiCrbReport {
    pub order: usize,
    #[serde(serialize_with = "row_major")]
    pub c_matrix: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub c_inverse: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub u_matrix: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub moment_crb: DMatrix<f64>,
    pub roughness_crb: f64,
}

impl DiCrbReport {
    pub fn new(reference: &SourceDistribution, cfg: &OpticalConfig, order: usize) -> Result<Self> {
        let order = order.max(1);
        let roughness_crb = di_roughness_crb(reference, cfg)?;
        let phi = image_moments_di(reference, cfg, 2 * order);
        Ok(Self {
            order,
            c_matrix: c_matrix(cfg, order),
            c_inverse: c_inverse(cfg, order),
            u_matrix: u_matrix(&phi, order)?,
            moment_crb: di_moment_crb(reference, cfg, order),
            roughness_crb,
        })
    }
}
