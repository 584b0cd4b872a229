mod common;

use common::*;
use roughness::optics::{mode_overlap_prob, OpticalConfig};
use roughness::quantum_bounds::quantum_bound_roughness;
use roughness::sources::{mode_intensities_spade, MomentKind, MomentVector, SourceDistribution};
use roughness::spade::*;
use roughness::EstimatorTarget;

fn spread(scale: f64) -> SourceDistribution {
    SourceDistribution::new(vec![-0.3, -0.1, 0.0, 0.15, 0.3], vec![0.15, 0.2, 0.3, 0.2, 0.15])
        .unwrap()
        .scaled(scale)
}

#[test]
fn exact_mode_identity_through_order_sixteen() {
    for zr in [rational(1, 2), rational(1, 1), rational(2, 1), rational(5, 3)] {
        for k in [0, 1, 7, 12, 16] {
            assert!(is_exact_identity(&exact_product(&exact_w(k, &zr), &exact_w_inverse(k, &zr))), "z_R={zr} K={k}");
        }
    }
}

#[test]
fn float_mode_matrices_match_exact_entries() {
    for (zr_f, zr) in [(0.5, rational(1, 2)), (1.0, rational(1, 1)), (2.0, rational(2, 1))] {
        let cfg = OpticalConfig::with_rayleigh_range(zr_f).unwrap();
        for k in [4, 16] {
            assert_eq!(max_relative_gap(&w_matrix(&cfg, k), &exact_w(k, &zr)), 0.0);
            assert_eq!(max_relative_gap(&w_inverse(&cfg, k), &exact_w_inverse(k, &zr)), 0.0);
        }
    }
}

#[test]
fn inverse_maps_intensities_back_to_moments() {
    // Σ_q (2z_R)^{2k} binom(q, k) f_q = θ_{2k}
    for zr in [0.5, 1.0, 2.0] {
        let cfg = OpticalConfig::with_rayleigh_range(zr).unwrap();
        let dist = spread(zr);
        let modes = product_truncation(&dist, &cfg, 4);
        let f = mode_intensities_spade(&dist, &cfg, modes);
        let back = w_inverse_rect(&cfg, 4, modes) * nalgebra::DVector::from_column_slice(&f.values);
        let theta = dist.even_moments(4);
        for k in 0..=4 {
            let t = theta.get(k);
            assert!((back[k] - t).abs() <= 1e-12 * t.max(1e-300) + 1e-15, "k={k}: {} vs {t}", back[k]);
        }
    }
}

#[test]
fn closed_form_crb_matches_matrix_product() {
    for zr in [0.5, 1.0, 2.0] {
        let cfg = OpticalConfig::with_rayleigh_range(zr).unwrap();
        for dist in [
            spread(zr),
            SourceDistribution::symmetric_pair(0.05 * zr).unwrap(),
            SourceDistribution::new(vec![-0.2 * zr, 0.3 * zr], vec![0.6, 0.4]).unwrap(),
        ] {
            for order in [1, 3, 10] {
                let (product, modes) = spade_moment_crb_product(&dist, &cfg, order);
                assert!(roughness::sources::mode_tail_mass(&dist, &cfg, modes) <= MODE_TAIL_TOLERANCE);
                let gap = scaled_gap(&spade_moment_crb(&dist, &cfg, order), &product);
                assert!(gap <= 1e-9, "zr={zr} K={order}: {gap}");
            }
        }
    }
}

#[test]
fn second_moment_entry() {
    let cfg = OpticalConfig::with_rayleigh_range(1.4).unwrap();
    let dist = spread(1.0);
    let v = spade_moment_crb(&dist, &cfg, 1);
    let (t2, t4) = (dist.axial_moment(2), dist.axial_moment(4));
    let expected = 2.0 * t4 + 4.0 * 1.96 * t2 - t2 * t2;
    assert!((v[(1, 1)] - expected).abs() <= 1e-14 * expected);
}

#[test]
fn categorical_covariance_example() {
    let f = MomentVector {
        kind: MomentKind::ModeF,
        values: vec![0.5, 0.5],
        order: 1,
    };
    let d = d_matrix(&f, 1).unwrap();
    assert_eq!(d.as_slice(), &[0.25, -0.25, -0.25, 0.25]);
}

#[test]
fn roughness_crb_for_pairs() {
    let cfg = OpticalConfig::default();
    for (s, v) in [(0.1, 1.0025), (0.05, 1.000625)] {
        let got = spade_roughness_crb(&SourceDistribution::symmetric_pair(s).unwrap(), &cfg).unwrap();
        assert!((got - v).abs() <= 1e-12, "{got}");
    }
}

#[test]
fn classical_bound_dominates_quantum() {
    for zr in [0.5, 1.0, 2.0] {
        let cfg = OpticalConfig::with_rayleigh_range(zr).unwrap();
        for dist in [spread(zr), SourceDistribution::symmetric_pair(0.01 * zr).unwrap()] {
            let c = dist.translated(-dist.mean());
            let lg = spade_roughness_crb(&c, &cfg).unwrap();
            let q = quantum_bound_roughness(&c, &cfg).unwrap();
            assert!(lg > q, "{lg} vs {q}");
        }
    }
}

#[test]
fn influence_function_has_zero_mean_under_reference() {
    for zr in [0.5, 1.0, 2.0] {
        let cfg = OpticalConfig::with_rayleigh_range(zr).unwrap();
        let reference = spread(zr).translated(-spread(zr).mean());
        for target in [EstimatorTarget::Roughness, EstimatorTarget::Theta2] {
            let inf = SpadeInfluence::new(&reference, &cfg, target).unwrap();
            let modes = product_truncation(&reference, &cfg, 2);
            let mean: f64 = roughness::numeric::compensated_sum((0..=modes as u64).map(|q| {
                let f: f64 = reference.iter().map(|(z, p)| p * mode_overlap_prob(q, z, &cfg)).sum();
                inf.eval(q) * f
            }));
            assert!(mean.abs() <= 1e-12, "zr={zr} {target:?}: {mean}");
        }
    }
}

#[test]
fn influence_second_moment_is_crb() {
    let cfg = OpticalConfig::default();
    for s in [0.05, 0.2] {
        let reference = SourceDistribution::symmetric_pair(s).unwrap();
        let inf = SpadeInfluence::new(&reference, &cfg, EstimatorTarget::Roughness).unwrap();
        let modes = product_truncation(&reference, &cfg, 2);
        let second: f64 = (0..=modes as u64)
            .map(|q| {
                let f: f64 = reference.iter().map(|(z, p)| p * mode_overlap_prob(q, z, &cfg)).sum();
                inf.eval(q).powi(2) * f
            })
            .sum();
        let crb = spade_roughness_crb(&reference, &cfg).unwrap();
        assert!((second / crb - 1.0).abs() <= 1e-10, "{second} vs {crb}");
    }
}

#[test]
fn attains_quantum_bound_in_the_small_spread_limit() {
    let cfg = OpticalConfig::default();
    let s = 1e-3;
    let lg = spade_roughness_crb(&SourceDistribution::symmetric_pair(s).unwrap(), &cfg).unwrap();
    assert!((lg - (1.0 + s * s / 4.0)).abs() <= 1e-12);
    assert!((lg - 1.0).abs() <= 1e-6);
}
