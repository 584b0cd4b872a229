//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export returns a flat `Float64Array`; the plain functions behind them
//! are ordinary Rust so they can be tested natively.

use wasm_bindgen::prelude::*;

use roughness::direct_imaging::di_roughness_crb;
use roughness::montecarlo::run_experiment;
use roughness::optics::mode_overlap_prob;
use roughness::quantum_bounds::quantum_bound_roughness;
use roughness::spade::spade_roughness_crb;
use roughness::{Channel, ExperimentConfig, OpticalConfig, SourceDistribution};

/// Upper limit on photons × repetitions per call, to keep the page responsive.
pub const MAX_SIMULATED_PHOTONS: u64 = 50_000_000;

/// Rows of `[s, 𝒱^Q_σ, 𝒱^LG_σ, 𝒱^DI_σ]` for a symmetric pair at `±s`,
/// with `s` log-spaced over `[s_min, s_max]`.
pub fn bounds_vs_separation(rayleigh_range: f64, s_min: f64, s_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let cfg = OpticalConfig::with_rayleigh_range(rayleigh_range).map_err(|e| e.to_string())?;
    if !(s_min > 0.0 && s_max > s_min && s_max.is_finite()) {
        return Err(format!("need 0 < s_min < s_max, got {s_min} and {s_max}"));
    }
    if points < 2 {
        return Err("need at least 2 points".into());
    }
    let ratio = (s_max / s_min).ln();
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let s = s_min * (ratio * i as f64 / (points - 1) as f64).exp();
        let pair = SourceDistribution::symmetric_pair(s).map_err(|e| e.to_string())?;
        let row = (|| -> roughness::Result<[f64; 4]> {
            Ok([
                s,
                quantum_bound_roughness(&pair, &cfg)?,
                spade_roughness_crb(&pair, &cfg)?,
                di_roughness_crb(&pair, &cfg)?,
            ])
        })()
        .map_err(|e| e.to_string())?;
        out.extend_from_slice(&row);
    }
    Ok(out)
}

/// `H(q; z)` for `q = 0..=max_q`.
pub fn mode_probabilities(z: f64, rayleigh_range: f64, max_q: u32) -> Result<Vec<f64>, String> {
    let cfg = OpticalConfig::with_rayleigh_range(rayleigh_range).map_err(|e| e.to_string())?;
    if !z.is_finite() {
        return Err(format!("z must be finite, got {z}"));
    }
    Ok((0..=u64::from(max_q)).map(|q| mode_overlap_prob(q, z, &cfg)).collect())
}

/// Simulates a pair at `±s` and returns
/// `[m·Var(σ̂), analytic CRB, quantum bound, ratio, mean σ̂]`.
pub fn simulate_pair(
    spade: bool,
    s: f64,
    rayleigh_range: f64,
    photons: u32,
    repetitions: u32,
    seed: u32,
) -> Result<Vec<f64>, String> {
    if u64::from(photons) * u64::from(repetitions) > MAX_SIMULATED_PHOTONS {
        return Err(format!("photons × repetitions is capped at {MAX_SIMULATED_PHOTONS} in the browser"));
    }
    let cfg = OpticalConfig::with_rayleigh_range(rayleigh_range).map_err(|e| e.to_string())?;
    let pair = SourceDistribution::symmetric_pair(s).map_err(|e| e.to_string())?;
    let channel = if spade { Channel::Spade } else { Channel::DirectImaging };
    let mut config = ExperimentConfig::new(pair, cfg, channel);
    config.photons_per_run = photons.into();
    config.repetitions = repetitions.into();
    config.seed = seed.into();
    let r = run_experiment(&config).map_err(|e| e.to_string())?;
    Ok(vec![r.empirical_rescaled_variance, r.analytic_crb, r.quantum_bound, r.ratio, r.empirical_mean])
}

#[wasm_bindgen(js_name = boundsVsSeparation)]
pub fn bounds_vs_separation_js(rayleigh_range: f64, s_min: f64, s_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    bounds_vs_separation(rayleigh_range, s_min, s_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = modeProbabilities)]
pub fn mode_probabilities_js(z: f64, rayleigh_range: f64, max_q: u32) -> Result<Vec<f64>, JsError> {
    mode_probabilities(z, rayleigh_range, max_q).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = simulatePair)]
pub fn simulate_pair_js(
    spade: bool,
    s: f64,
    rayleigh_range: f64,
    photons: u32,
    repetitions: u32,
    seed: u32,
) -> Result<Vec<f64>, JsError> {
    simulate_pair(spade, s, rayleigh_range, photons, repetitions, seed).map_err(|e| JsError::new(&e))
}
