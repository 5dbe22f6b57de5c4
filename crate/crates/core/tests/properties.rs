//! Invariants checked against brute-force oracles over random inputs.

use std::f64::consts::TAU;

use num_complex::Complex64;
use proptest::prelude::*;

use ttd_aoa::array::{
    array_response, complex_gaussian_noise, noise_rng, noiseless_observation, psi,
    response_from_phase,
};
use ttd_aoa::estimators::{
    invert_angle_to_peak_freq, peak_estimate, peak_freq_to_angle, smooth_circular,
};
use ttd_aoa::fisher::{kappa_from_phase, kappa_moments};
use ttd_aoa::{ArrayConfig, FrequencyGrid, PeakConfig, Quadrature, SignalSpec};

fn response_oracle(psi: f64, m: usize) -> Complex64 {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, -(k as f64) * psi))
        .sum()
}

fn kappa_oracle(psi: f64, m: usize) -> f64 {
    (0..m)
        .map(|k| k as f64 * Complex64::from_polar(1.0, -(k as f64) * psi))
        .sum::<Complex64>()
        .norm_sqr()
}

fn array_strategy() -> impl Strategy<Value = ArrayConfig> {
    (
        2usize..=64,
        1e9f64..20e9,
        0.001f64..0.4,
        0.3f64..1.5,
        0.2f64..3.0,
    )
        .prop_map(|(m, fc, beta, spacing, delay)| {
            let bandwidth = fc * beta;
            ArrayConfig {
                num_elements: m,
                element_spacing: spacing * 3e8 / fc,
                carrier_freq: fc,
                bandwidth,
                ttd_delay: delay / bandwidth,
                wave_speed: 3e8,
            }
        })
}

proptest! {
    #[test]
    fn response_closed_form_matches_direct_sum(psi in -50.0f64..50.0, m in 2usize..=64) {
        let closed = response_from_phase(psi, m);
        let direct = response_oracle(psi, m);
        // Nulls make a purely relative metric meaningless.
        prop_assert!((closed - direct).norm() / direct.norm().max(1.0) < 1e-9);
        prop_assert!(closed.norm() <= m as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn response_near_singular_phase(k in -6i32..=6, eps in -1e-7f64..1e-7, m in 2usize..=64) {
        let psi = TAU * k as f64 + eps;
        let closed = response_from_phase(psi, m);
        prop_assert!((closed - response_oracle(psi, m)).norm() < 1e-6 * m as f64);
    }

    #[test]
    fn psi_is_affine_in_frequency(cfg in array_strategy(), phi in -1.5f64..1.5, a in -0.5f64..0.5, b in -0.5f64..0.5) {
        let f1 = a * cfg.bandwidth;
        let f2 = b * cfg.bandwidth;
        let mid = 0.5 * (f1 + f2);
        let lhs = psi(mid, phi, &cfg);
        let rhs = 0.5 * (psi(f1, phi, &cfg) + psi(f2, phi, &cfg));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn response_magnitude_bounded(cfg in array_strategy(), phi in -1.5f64..1.5, a in -0.5f64..0.5) {
        let h = array_response(a * cfg.bandwidth, phi, &cfg);
        prop_assert!(h.norm() <= cfg.num_elements as f64 * (1.0 + 1e-12));
    }

    #[test]
    fn kappa_matches_oracle_and_symmetries(psi in -40.0f64..40.0, m in 2usize..=64) {
        let k = kappa_from_phase(psi, m);
        let oracle = kappa_oracle(psi, m);
        prop_assert!(k >= 0.0);
        prop_assert!((k - oracle).abs() <= 1e-9 * oracle);
        prop_assert!((kappa_from_phase(-psi, m) - k).abs() <= 1e-9 * k);
        prop_assert!((kappa_from_phase(psi + TAU, m) - k).abs() <= 1e-9 * k);
    }

    #[test]
    fn moment_bounds(cfg in array_strategy(), phi in -1.2f64..1.2) {
        let m = kappa_moments(phi, &cfg, Quadrature::Fixed(512)).unwrap();
        let half = cfg.bandwidth / 2.0;
        prop_assert!(m.kappa0 > 0.0);
        prop_assert!(m.kappa1.abs() <= half * m.kappa0 * (1.0 + 1e-12));
        prop_assert!(m.kappa2 >= 0.0);
        prop_assert!(m.kappa2 <= half * half * m.kappa0 * (1.0 + 1e-12));
    }

    #[test]
    fn circular_smoothing_preserves_total(
        values in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 8..200),
        half in 0usize..3,
    ) {
        let z: Vec<Complex64> = values.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let b = 2 * half + 1;
        let smoothed = smooth_circular(&z, b).unwrap();
        let total: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let smoothed_total: f64 = smoothed.iter().sum();
        prop_assert!((smoothed_total - b as f64 * total).abs() <= 1e-9 * (1.0 + b as f64 * total));
        // Brute-force window at one index.
        let n = z.len();
        let i = n / 2;
        let direct: f64 = (0..b).map(|j| z[(i + n + j - half) % n].norm_sqr()).sum();
        prop_assert!((smoothed[i] - direct).abs() <= 1e-9 * (1.0 + direct));
    }

    #[test]
    fn angle_map_is_monotone_decreasing(a in -0.5f64..0.5, b in -0.5f64..0.5) {
        let cfg = ArrayConfig::default();
        let (f1, f2) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(f2 - f1 > 1e-6);
        let (p1, _) = peak_freq_to_angle(f1 * cfg.bandwidth * 0.99, &cfg, true).unwrap();
        let (p2, _) = peak_freq_to_angle(f2 * cfg.bandwidth * 0.99, &cfg, true).unwrap();
        prop_assert!(p2 <= p1);
    }

    #[test]
    fn angle_round_trip(cfg in array_strategy(), phi in -1.3f64..1.3) {
        let f = invert_angle_to_peak_freq(phi, &cfg).unwrap();
        prop_assume!(f.is_finite() && f > -cfg.carrier_freq);
        let (back, clamped) = peak_freq_to_angle(f, &cfg, false).unwrap();
        prop_assert!(!clamped);
        prop_assert!((back - phi).abs() < 1e-9);
    }
}

#[test]
fn noise_has_requested_variance_and_is_white() {
    let n = 200_000;
    let var = 2.5;
    let noise = complex_gaussian_noise(&mut noise_rng(11), n, var);
    let power = noise.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
    let re = noise.iter().map(|v| v.re * v.re).sum::<f64>() / n as f64;
    let cross = noise.iter().map(|v| v.re * v.im).sum::<f64>() / n as f64;
    let lag1 = noise
        .windows(2)
        .map(|w| (w[0] * w[1].conj()).re)
        .sum::<f64>()
        / n as f64;
    assert!((power / var - 1.0).abs() < 0.01, "power {power}");
    assert!((re / (var / 2.0) - 1.0).abs() < 0.015, "real part {re}");
    assert!(cross.abs() < 0.01 * var, "re/im correlation {cross}");
    assert!(lag1.abs() < 0.01 * var, "lag-1 correlation {lag1}");
}

#[test]
fn noiseless_peak_lands_within_one_bin_of_prediction() {
    let cfg = ArrayConfig::default();
    let grid = FrequencyGrid::for_array(512, &cfg).unwrap();
    let sig = SignalSpec::unit(cfg.bandwidth);
    let pcfg = PeakConfig {
        window_size: 1,
        clamp_out_of_range: true,
    };
    for k in -60..=60 {
        let phi = (k as f64).to_radians();
        let obs = noiseless_observation(phi, 0.0, &grid, &sig, &cfg).unwrap();
        let est = peak_estimate(&obs, &pcfg, &grid, &cfg).unwrap();
        let predicted = invert_angle_to_peak_freq(phi, &cfg).unwrap();
        let selected = match est.diagnostic {
            ttd_aoa::estimators::Diagnostic::Peak { freq_hz, .. } => freq_hz,
            _ => unreachable!(),
        };
        assert!(
            (selected - predicted).abs() <= grid.spacing() + 1e-6,
            "phi {k} deg: bin {selected} vs predicted {predicted}"
        );
    }
}
