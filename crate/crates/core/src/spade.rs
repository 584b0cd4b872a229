//! Spatial mode demultiplexing in the rotationally symmetric Laguerre-Gauss
//! basis. Mode intensities are `f = Wθ` over even object moments; the
//! influence function built from `W⁻¹` reaches the quantum roughness bound
//! as the source distribution shrinks.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::direct_imaging::quadratic_form;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorTarget, LinearizedTarget};
use crate::numeric::{binomial, compensated_sum, ln_binomial};
use crate::optics::{defocus_ratio, OpticalConfig};
use crate::report::row_major;
use crate::sources::{mode_intensities_spade, mode_tail_mass, MomentKind, MomentVector, SourceDistribution};

/// Tail mass allowed beyond the mode truncation used for histograms and `D`.
pub const MODE_TAIL_TOLERANCE: f64 = 1e-14;

const MAX_MODE_TRUNCATION: usize = 100_000;

/// `binom(n, k) · base^power`, falling back to log space when either factor
/// over- or underflows on its own.
fn scaled_binomial(n: u64, k: u64, base: f64, power: i32) -> f64 {
    let b = binomial(n, k);
    if b == 0.0 {
        return 0.0;
    }
    let s = base.powi(power);
    let v = b * s;
    if s.is_finite() && s != 0.0 && v.is_finite() && v != 0.0 {
        v
    } else {
        (ln_binomial(n, k) + power as f64 * base.ln()).exp()
    }
}

fn two_zr(cfg: &OpticalConfig) -> f64 {
    2.0 * cfg.rayleigh_range()
}

/// Upper-triangular `[W]_{qk} = (−1)^{k−q} binom(k, q) / (2z_R)^{2k}`.
pub fn w_matrix(cfg: &OpticalConfig, order: usize) -> DMatrix<f64> {
    let b = two_zr(cfg);
    DMatrix::from_fn(order + 1, order + 1, |q, k| {
        if q > k {
            0.0
        } else {
            let sign = if (k - q) % 2 == 0 { 1.0 } else { -1.0 };
            sign * scaled_binomial(k as u64, q as u64, b, -2 * k as i32)
        }
    })
}

/// `[W⁻¹]_{kq} = (2z_R)^{2k} binom(q, k)`, rows `k = 0..=order`, columns
/// `q = 0..=modes`. Nonzero only for `q ≥ k`, so the square case is upper
/// triangular like `W`.
pub fn w_inverse_rect(cfg: &OpticalConfig, order: usize, modes: usize) -> DMatrix<f64> {
    let b = two_zr(cfg);
    DMatrix::from_fn(order + 1, modes + 1, |k, q| {
        if q < k {
            0.0
        } else {
            scaled_binomial(q as u64, k as u64, b, 2 * k as i32)
        }
    })
}

pub fn w_inverse(cfg: &OpticalConfig, order: usize) -> DMatrix<f64> {
    w_inverse_rect(cfg, order, order)
}

/// Categorical covariance `[D]_{qp} = δ_{qp} f_q − f_q f_p` for `q, p = 0..=modes`.
pub fn d_matrix(f: &MomentVector, modes: usize) -> Result<DMatrix<f64>> {
    if f.kind != MomentKind::ModeF {
        return Err(Error::InvalidArgument(format!(
            "D needs mode intensities, got {:?}",
            f.kind
        )));
    }
    if f.order < modes {
        return Err(Error::InvalidArgument(format!(
            "D of order {modes} needs intensities up to f_{modes}, have up to f_{}",
            f.order
        )));
    }
    if let Some(x) = f.values.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(Error::InvalidArgument(format!("invalid mode intensity {x}")));
    }
    let v = &f.values;
    Ok(DMatrix::from_fn(modes + 1, modes + 1, |q, p| {
        let diag = if q == p { v[q] } else { 0.0 };
        diag - v[q] * v[p]
    }))
}

/// Smallest `Q` with `Σ_i p_i ξ_i^{Q+1} < tolerance`.
pub fn mode_truncation(dist: &SourceDistribution, cfg: &OpticalConfig, tolerance: f64) -> usize {
    let mut q = 0;
    while q < MAX_MODE_TRUNCATION && mode_tail_mass(dist, cfg, q) >= tolerance {
        q += 1;
    }
    q
}

/// Mode cutoff for the `W⁻¹ D W⁻ᵀ` product at moment order `order`.
///
/// Rows of `W⁻¹` grow like `binom(q, k)`, so the plain tail-mass cutoff is
/// not enough for high moment orders; this extends it until the largest
/// weighted term `(2z_R)^{4K} binom(q, K)² p_i ξ_i^q` is below `1e-40`
/// relative to the leading one and decreasing.
pub fn product_truncation(dist: &SourceDistribution, cfg: &OpticalConfig, order: usize) -> usize {
    let base = mode_truncation(dist, cfg, MODE_TAIL_TOLERANCE).max(order);
    let ln_xi: Vec<(f64, f64)> = dist
        .iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(z, p)| (p.ln(), defocus_ratio(z, cfg).ln()))
        .collect();
    let log_term = |q: usize| {
        ln_xi
            .iter()
            .map(|&(lp, lx)| 2.0 * ln_binomial(q as u64, order as u64) + lp + q as f64 * lx)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let lead = log_term(order);
    if !lead.is_finite() {
        return base;
    }
    let mut q = base;
    while q < MAX_MODE_TRUNCATION && (log_term(q) > lead - 92.0 || log_term(q + 1) >= log_term(q)) {
        q += 1;
    }
    q
}

/// Closed-form moment CRB over `θ₀, θ₂, …, θ_{2·order}`,
/// `[𝒱^LG_θ]_{ij} = Σ_{k≤min(i,j)} binom(i+j−k, j) binom(j, k) (2z_R)^{2k} θ_{2(i+j−k)} − θ_{2i}θ_{2j}`.
pub fn spade_moment_crb(dist: &SourceDistribution, cfg: &OpticalConfig, order: usize) -> DMatrix<f64> {
    let theta = dist.even_moments(2 * order).values;
    let b = two_zr(cfg);
    let v = DMatrix::from_fn(order + 1, order + 1, |i, j| {
        let sum = compensated_sum((0..=i.min(j)).map(|k| {
            binomial((i + j - k) as u64, j as u64)
                * scaled_binomial(j as u64, k as u64, b, 2 * k as i32)
                * theta[i + j - k]
        }));
        sum - theta[i] * theta[j]
    });
    (&v + v.transpose()) * 0.5
}

/// The same matrix through `W⁻¹ D W⁻ᵀ` with mode intensities computed from
/// the overlap law. Returns the matrix and the mode cutoff used.
pub fn spade_moment_crb_product(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    order: usize,
) -> (DMatrix<f64>, usize) {
    let modes = product_truncation(dist, cfg, order);
    let f = mode_intensities_spade(dist, cfg, modes);
    let d = d_matrix(&f, modes).expect("intensities are nonnegative");
    let winv = w_inverse_rect(cfg, order, modes);
    let v = &winv * d * winv.transpose();
    ((&v + v.transpose()) * 0.5, modes)
}

/// `𝒱^LG_σ = z_R² + θ₄/(2θ₂) − θ₂/4` for a centered distribution.
pub fn spade_roughness_crb(dist: &SourceDistribution, cfg: &OpticalConfig) -> Result<f64> {
    spade_target_crb(dist, cfg, EstimatorTarget::Roughness)
}

pub fn spade_target_crb(
    dist: &SourceDistribution,
    cfg: &OpticalConfig,
    target: EstimatorTarget,
) -> Result<f64> {
    let lin = match target {
        EstimatorTarget::RoughnessPlugin => LinearizedTarget::new(EstimatorTarget::Roughness, dist)?,
        t => LinearizedTarget::new(t, dist)?,
    };
    let order = lin.gradient.len() - 1;
    Ok(quadratic_form(&lin.gradient, &spade_moment_crb(dist, cfg, order)))
}

/// Photon counts per Laguerre-Gauss mode index.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ModeHistogram {
    counts: Vec<u64>,
}

impl ModeHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn record(&mut self, q: u64) {
        let q = q as usize;
        if q >= self.counts.len() {
            self.counts.resize(q + 1, 0);
        }
        self.counts[q] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Counts with mode index above `cutoff`.
    pub fn beyond(&self, cutoff: usize) -> u64 {
        self.counts.iter().skip(cutoff + 1).sum()
    }

    pub fn merge(&mut self, other: &ModeHistogram) {
        if other.counts.len() > self.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Influence function `φ(q) = ∂βᵀW⁻¹𝔑(q) − ∂βᵀW⁻¹f₀` for one SPADE outcome.
///
/// `W⁻¹f₀` is the reference moment vector itself, so the offset is taken
/// from the exact moments rather than a truncated intensity vector.
#[derive(Debug, Clone)]
pub struct SpadeInfluence {
    target: EstimatorTarget,
    lin: LinearizedTarget,
    two_zr: f64,
    offset: f64,
}

impl SpadeInfluence {
    pub fn new(
        reference: &SourceDistribution,
        cfg: &OpticalConfig,
        target: EstimatorTarget,
    ) -> Result<Self> {
        let lin = LinearizedTarget::new(target, reference)?;
        let theta = reference.even_moments(lin.gradient.len() - 1);
        let offset = compensated_sum(lin.gradient.iter().zip(&theta.values).map(|(g, t)| g * t));
        Ok(Self {
            target,
            lin,
            two_zr: two_zr(cfg),
            offset,
        })
    }

    pub fn eval(&self, q: u64) -> f64 {
        let row = compensated_sum(self.lin.gradient.iter().enumerate().map(|(k, g)| {
            if *g == 0.0 {
                0.0
            } else {
                g * scaled_binomial(q, k as u64, self.two_zr, 2 * k as i32)
            }
        }));
        row - self.offset
    }

    pub fn reference_value(&self) -> f64 {
        self.lin.beta0
    }

    pub fn finish(&self, mean_influence: f64) -> f64 {
        self.lin.finish(self.target, mean_influence)
    }

    pub fn estimate(&self, histogram: &ModeHistogram) -> Result<f64> {
        let total = histogram.total();
        if total == 0 {
            return Err(Error::InvalidArgument("empty mode histogram".into()));
        }
        let sum = compensated_sum(
            histogram
                .counts()
                .iter()
                .enumerate()
                .filter(|(_, n)| **n > 0)
                .map(|(q, n)| *n as f64 * self.eval(q as u64)),
        );
        Ok(self.finish(sum / total as f64))
    }
}

pub fn spade_influence_estimate(
    histogram: &ModeHistogram,
    reference: &SourceDistribution,
    cfg: &OpticalConfig,
    target: EstimatorTarget,
) -> Result<f64> {
    if histogram.total() == 0 {
        return Err(Error::InvalidArgument("empty mode histogram".into()));
    }
    SpadeInfluence::new(reference, cfg, target)?.estimate(histogram)
}

/// SPADE matrices and CRBs for one reference distribution.
#[derive(Debug, Clone, Serialize)]
pub struct SpadeCrbReport {
    pub order: usize,
    /// Mode cutoff `Q` of `d_matrix`.
    pub mode_order: usize,
    #[serde(serialize_with = "row_major")]
    pub w_matrix: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub w_inverse: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub d_matrix: DMatrix<f64>,
    #[serde(serialize_with = "row_major")]
    pub moment_crb: DMatrix<f64>,
    pub roughness_crb: f64,
}

impl SpadeCrbReport {
    pub fn new(dist: &SourceDistribution, cfg: &OpticalConfig, order: usize) -> Result<Self> {
        let order = order.max(1);
        let roughness_crb = spade_roughness_crb(dist, cfg)?;
        let modes = mode_truncation(dist, cfg, MODE_TAIL_TOLERANCE).max(order);
        let f = mode_intensities_spade(dist, cfg, modes);
        Ok(Self {
            order,
            mode_order: modes,
            w_matrix: w_matrix(cfg, order),
            w_inverse: w_inverse(cfg, order),
            d_matrix: d_matrix(&f, modes)?,
            moment_crb: spade_moment_crb(dist, cfg, order),
            roughness_crb,
        })
    }
}
