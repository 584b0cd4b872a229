//! Quantum Fisher information for axial source displacements and the
//! resulting quantum limits on mean height and roughness.
//!
//! The displacement QFIm is read off the fidelity between neighbouring
//! states, which equals the trace norm of the metrology matrix
//! `M_ij = Tr[K_i(z)† K_j(z + dz) ρ₀] = √(p_i p_j) ⟨ψ₀|ψ_{z_j + dz_j − z_i}⟩`
//! for Kraus operators `K_j = √p_j e^{−i z_j G}`.

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::EstimatorTarget;
use crate::optics::{focused_overlap, generator_variance, OpticalConfig};
use crate::report::row_major;
use crate::sources::SourceDistribution;

/// Condition number above which the moment Jacobian is treated as singular.
pub const JACOBIAN_CONDITION_LIMIT: f64 = 1e12;

/// Metrology matrix for source positions `dist` shifted by `shifts`.
pub fn metrology_matrix(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    shifts: &[f64],
) -> DMatrix<Complex<f64>> {
    assert_eq!(shifts.len(), dist.len(), "one shift per source");
    let z = dist.positions();
    let p = dist.weights();
    DMatrix::from_fn(dist.len(), dist.len(), |i, j| {
        focused_overlap(z[j] + shifts[j] - z[i], cfg) * (p[i] * p[j]).sqrt()
    })
}

/// Sum of singular values.
pub fn trace_norm(m: &DMatrix<Complex<f64>>) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// `1 − ‖M(z, dz)‖₁`, the infidelity between neighbouring states.
pub fn trace_norm_deficit(dist: &SourceDistribution, cfg: &OpticalConfig, shifts: &[f64]) -> f64 {
    1.0 - trace_norm(&metrology_matrix(dist, cfg, shifts))
}

/// Displacement QFIm from the quadratic form `dzᵀ𝒦dz = 8(1 − ‖M‖₁)`.
///
/// Diagonal entries come from probing `dz·e_i`; off-diagonal entries from
/// `dz·(e_i + e_j)` by polarization.
pub fn metrology_matrix_qfi(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    step: f64,
) -> Result<DMatrix<f64>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let n = dist.len();
    let form = |dirs: &[usize]| {
        let mut shifts = vec![0.0; n];
        for &d in dirs {
            shifts[d] = step;
        }
        8.0 * trace_norm_deficit(dist, cfg, &shifts) / (step * step)
    };
    let diag: Vec<f64> = (0..n).map(|i| form(&[i])).collect();
    let mut k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
    for i in 0..n {
        for j in (i + 1)..n {
            let off = 0.5 * (form(&[i, j]) - diag[i] - diag[j]);
            k[(i, j)] = off;
            k[(j, i)] = off;
        }
    }
    Ok(k)
}

/// Leading-order displacement QFIm `4Δ₀G² · diag(p)`.
pub fn qfi_displacements_closed_form(dist: &SourceDistribution, cfg: &OpticalConfig) -> DMatrix<f64> {
    let scale = 4.0 * generator_variance(cfg);
    DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dist.len(),
        dist.weights().iter().map(|p| scale * p),
    ))
}

/// `1/(4Δ₀G²)`, which is `z_R²` for the Gaussian beam.
fn inverse_qfi_scale(cfg: &OpticalConfig) -> f64 {
    cfg.rayleigh_range().powi(2)
}

/// Inverse QFIm over moments `θ_1..θ_order`: `[𝒦(θ)⁻¹]_{ij} = i j θ_{i+j−2} / (4Δ₀G²)`.
///
/// Row and column `i − 1` hold moment `θ_i`.
pub fn inverse_qfi_moments(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    order: usize,
) -> Result<DMatrix<f64>> {
    if order == 0 {
        return Err(Error::InvalidArgument("moment order must be at least 1".into()));
    }
    let scale = inverse_qfi_scale(cfg);
    let theta: Vec<f64> = (0..=2 * order - 2).map(|l| dist.axial_moment(l as u32)).collect();
    Ok(DMatrix::from_fn(order, order, |a, b| {
        let (i, j) = (a + 1, b + 1);
        (i * j) as f64 * theta[i + j - 2] * scale
    }))
}

/// How [`reparametrized_inverse_qfi`] produced its matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReparametrizationRoute {
    Jacobian,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentInverseQfi {
    #[serde(serialize_with = "row_major")]
    pub matrix: DMatrix<f64>,
    pub route: ReparametrizationRoute,
    pub warning: Option<String>,
}

/// `𝒦(θ)⁻¹ = Jᵀ 𝒦(z)⁻¹ J` with `J_{ij} = ∂θ_j/∂z_i = j p_i z_i^{j−1}`, as a
/// change of coordinates from the `N` positions to moments `θ_1..θ_N`.
///
/// Falls back to [`inverse_qfi_moments`] when `J` is singular or badly
/// conditioned, or a source has zero weight, recording why.
pub fn reparametrized_inverse_qfi(dist: &SourceDistribution, cfg: &OpticalConfig) -> MomentInverseQfi {
    let n = dist.len();
    let z = dist.positions();
    let p = dist.weights();
    let closed = |warning: String| MomentInverseQfi {
        matrix: inverse_qfi_moments(dist, cfg, n).expect("n ≥ 1"),
        route: ReparametrizationRoute::ClosedForm,
        warning: Some(warning),
    };
    if p.contains(&0.0) {
        return closed("zero-weight source makes the displacement QFIm singular".into());
    }
    let jac = DMatrix::from_fn(n, n, |i, a| {
        let j = a + 1;
        j as f64 * p[i] * z[i].powi(j as i32 - 1)
    });
    let sv = jac.clone().singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(hi, lo), s| (hi.max(*s), lo.min(*s)));
    let condition = smax / smin;
    if !(condition.is_finite() && condition <= JACOBIAN_CONDITION_LIMIT) {
        return closed(format!(
            "moment Jacobian condition number {condition:.3e} exceeds {JACOBIAN_CONDITION_LIMIT:e}"
        ));
    }
    let kz = qfi_displacements_closed_form(dist, cfg);
    let kz_inv = DMatrix::from_diagonal(&kz.diagonal().map(|x| 1.0 / x));
    let m = jac.transpose() * kz_inv * &jac;
    MomentInverseQfi {
        matrix: (&m + m.transpose()) * 0.5,
        route: ReparametrizationRoute::Jacobian,
        warning: None,
    }
}

/// Quantum limit on the rescaled error of the mean height, `1/(4Δ₀G²)`.
pub fn quantum_bound_mean(cfg: &OpticalConfig) -> f64 {
    inverse_qfi_scale(cfg)
}

/// Quantum limit on the rescaled roughness error,
/// `(∂σ)ᵀ𝒦(θ)⁻¹(∂σ)` with `∂σ/∂θ₁ = −θ₁/σ`, `∂σ/∂θ₂ = 1/(2σ)`.
pub fn quantum_bound_roughness(dist: &SourceDistribution, cfg: &OpticalConfig) -> Result<f64> {
    let sigma = dist.roughness();
    if sigma == 0.0 {
        return Err(Error::SingularParametrization(
            "roughness is zero, so dσ/dθ₂ = 1/(2σ) is undefined".into(),
        ));
    }
    let kinv = inverse_qfi_moments(dist, cfg, 2)?;
    let g = [-dist.mean() / sigma, 1.0 / (2.0 * sigma)];
    Ok(g[0] * g[0] * kinv[(0, 0)] + 2.0 * g[0] * g[1] * kinv[(0, 1)] + g[1] * g[1] * kinv[(1, 1)])
}

/// Quantum limit for an estimator target.
pub fn quantum_bound_target(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    target: EstimatorTarget,
) -> Result<f64> {
    match target {
        EstimatorTarget::Roughness | EstimatorTarget::RoughnessPlugin => quantum_bound_roughness(dist, cfg),
        EstimatorTarget::Theta2 => Ok(inverse_qfi_moments(dist, cfg, 2)?[(1, 1)]),
        EstimatorTarget::MeanHeight => Ok(quantum_bound_mean(cfg)),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QfiReport {
    #[serde(serialize_with = "row_major")]
    pub displacement_qfi: DMatrix<f64>,
    pub moment_order: usize,
    #[serde(serialize_with = "row_major")]
    pub inverse_moment_qfi: DMatrix<f64>,
    pub bound_mean: f64,
    pub bound_roughness: f64,
}

impl QfiReport {
    pub fn new(dist: &SourceDistribution, cfg: &OpticalConfig, order: usize) -> Result<Self> {
        Ok(Self {
            displacement_qfi: qfi_displacements_closed_form(dist, cfg),
            moment_order: order,
            inverse_moment_qfi: inverse_qfi_moments(dist, cfg, order)?,
            bound_mean: quantum_bound_mean(cfg),
            bound_roughness: quantum_bound_roughness(dist, cfg)?,
        })
    }
}
