//! Frequency-domain signal model of a uniform linear array fed through
//! per-element true-time delays.
//!
//! Element `m` of an `M`-element array sees the baseband spectrum `X(f)`
//! rotated by `e^{-j m psi(f, phi)}` where
//!
//! ```text
//! psi(f, phi) = 2 pi [ (f_c + f) (d / c) sin(phi) + f tau_d ]
//! ```
//!
//! combines the spatial phase progression with the delay line. The complex
//! gain, channel delay and common phase are assumed known and compensated, so
//! the combined response is `H(f, phi) = sum_m e^{-j m psi}` with unit
//! leading factor. Angles are radians throughout this module.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Propagation speed used when none is configured, in m/s.
pub const DEFAULT_WAVE_SPEED: f64 = 3.0e8;

/// Below this value of `|sin(psi / 2)|` the ratio forms are replaced by
/// their analytic limits.
pub const SINGULAR_THRESHOLD: f64 = 1e-8;

/// RNG used for every noise draw. ChaCha keeps streams reproducible across
/// platforms and crate versions.
pub type NoiseRng = ChaCha8Rng;

/// Physical parameters of the array and the band it observes.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    /// Number of elements `M`.
    pub num_elements: usize,
    /// Element spacing `d` in metres.
    pub element_spacing: f64,
    /// Carrier frequency `f_c` in Hz.
    pub carrier_freq: f64,
    /// Occupied bandwidth `B` in Hz.
    pub bandwidth: f64,
    /// Per-element true-time delay increment `tau_d` in seconds.
    pub ttd_delay: f64,
    /// Propagation speed `c` in m/s.
    pub wave_speed: f64,
}

impl Default for ArrayConfig {
    /// 8 elements, 4 cm spacing, 3.75 GHz carrier, 20 MHz band, `tau_d = 1/B`.
    fn default() -> Self {
        let bandwidth = 20e6;
        ArrayConfig {
            num_elements: 8,
            element_spacing: 0.04,
            carrier_freq: 3.75e9,
            bandwidth,
            ttd_delay: 1.0 / bandwidth,
            wave_speed: DEFAULT_WAVE_SPEED,
        }
    }
}

impl ArrayConfig {
    pub fn new(
        num_elements: usize,
        element_spacing: f64,
        carrier_freq: f64,
        bandwidth: f64,
        ttd_delay: f64,
        wave_speed: f64,
    ) -> Result<Self> {
        let cfg = ArrayConfig {
            num_elements,
            element_spacing,
            carrier_freq,
            bandwidth,
            ttd_delay,
            wave_speed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_elements < 2 {
            return Err(Error::invalid(
                "num_elements",
                format!(
                    "M = {} but at least 2 elements are required",
                    self.num_elements
                ),
            ));
        }
        positive("element_spacing", self.element_spacing)?;
        positive("carrier_freq", self.carrier_freq)?;
        positive("bandwidth", self.bandwidth)?;
        positive("wave_speed", self.wave_speed)?;
        if !(self.ttd_delay.is_finite() && self.ttd_delay >= 0.0) {
            return Err(Error::invalid(
                "ttd_delay",
                format!("tau_d = {} must be finite and >= 0", self.ttd_delay),
            ));
        }
        if self.bandwidth >= 2.0 * self.carrier_freq {
            return Err(Error::invalid(
                "bandwidth",
                format!(
                    "B = {} Hz must stay below 2 f_c = {} Hz so every bin has f_c + f > 0",
                    self.bandwidth,
                    2.0 * self.carrier_freq
                ),
            ));
        }
        Ok(())
    }

    /// Same configuration with a different element count.
    pub fn with_elements(&self, num_elements: usize) -> Self {
        ArrayConfig {
            num_elements,
            ..self.clone()
        }
    }

    /// Relative bandwidth `beta = B / f_c`.
    pub fn relative_bandwidth(&self) -> f64 {
        self.bandwidth / self.carrier_freq
    }

    /// Travel time across one element spacing, `d / c`.
    pub fn spacing_delay(&self) -> f64 {
        self.element_spacing / self.wave_speed
    }

    /// `d psi / d phi` at baseband frequency `f`.
    pub fn phase_slope(&self, f: f64, phi: f64) -> f64 {
        TAU * (self.carrier_freq + f) * self.spacing_delay() * phi.cos()
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            field,
            format!("{value} must be finite and > 0"),
        ))
    }
}

/// `N` bin centres covering `[-B/2, B/2]` with spacing `B / N`.
///
/// Bin `n` sits at the midpoint `-B/2 + (n + 1/2) B/N`, so sums over the
/// grid are midpoint-rule quadratures of the band.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    bins: Vec<f64>,
    spacing: f64,
    bandwidth: f64,
}

impl FrequencyGrid {
    pub fn new(num_bins: usize, bandwidth: f64) -> Result<Self> {
        if num_bins == 0 {
            return Err(Error::invalid("num_bins", "at least one bin is required"));
        }
        positive("bandwidth", bandwidth)?;
        let spacing = bandwidth / num_bins as f64;
        let bins = midpoints(num_bins, bandwidth);
        Ok(FrequencyGrid {
            bins,
            spacing,
            bandwidth,
        })
    }

    pub fn for_array(num_bins: usize, cfg: &ArrayConfig) -> Result<Self> {
        Self::new(num_bins, cfg.bandwidth)
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn freqs(&self) -> &[f64] {
        &self.bins
    }

    /// Bin spacing `B / N` in Hz.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Checks that the grid was built for the band of `cfg`.
    pub fn check_against(&self, cfg: &ArrayConfig) -> Result<()> {
        if (self.bandwidth - cfg.bandwidth).abs() > 1e-9 * cfg.bandwidth {
            return Err(Error::invalid(
                "frequency_grid",
                format!(
                    "grid spans {} Hz but the array band is {} Hz",
                    self.bandwidth, cfg.bandwidth
                ),
            ));
        }
        Ok(())
    }
}

/// Midpoint abscissae of `count` equal cells on `[-width/2, width/2]`.
pub(crate) fn midpoints(count: usize, width: f64) -> Vec<f64> {
    let step = width / count as f64;
    (0..count)
        .map(|n| -0.5 * width + (n as f64 + 0.5) * step)
        .collect()
}

/// Flat, real, symmetric transmit spectrum.
///
/// Every bin carries the same amplitude with `|X_n|^2 = E_s / B`, so the
/// Riemann sum `sum_n |X_n|^2 B/N` reproduces the total energy `E_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    total_energy: f64,
    amplitude: f64,
}

impl SignalSpec {
    pub fn new(total_energy: f64, bandwidth: f64) -> Result<Self> {
        positive("total_energy", total_energy)?;
        positive("bandwidth", bandwidth)?;
        Ok(SignalSpec {
            total_energy,
            amplitude: (total_energy / bandwidth).sqrt(),
        })
    }

    /// Spectrum with unit amplitude in every bin (`E_s = B`).
    pub fn unit(bandwidth: f64) -> Self {
        SignalSpec {
            total_energy: bandwidth,
            amplitude: 1.0,
        }
    }

    pub fn total_energy(&self) -> f64 {
        self.total_energy
    }

    /// Per-bin amplitude `|X_n|`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Per-bin power `|X_n|^2`.
    pub fn bin_power(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    /// Per-bin noise variance that realises `snr_db` before array combining.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.bin_power() / 10f64.powf(snr_db / 10.0)
    }
}

/// Frequency-domain snapshot `Z = X H(phi) + V`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub samples: Vec<Complex64>,
    /// Variance of the circular Gaussian noise per bin.
    pub noise_variance: f64,
    pub rng_seed: u64,
    /// Angle the snapshot was generated at.
    pub true_angle: f64,
    /// The noise draw was skipped and `samples` equals the noise-free signal.
    pub noiseless: bool,
}

/// Maps `psi` to the equivalent phase in `[-pi, pi]`.
pub fn wrap_phase(psi: f64) -> f64 {
    let wrapped = psi - TAU * (psi / TAU).round();
    wrapped.clamp(-PI, PI)
}

/// Per-element phase increment `psi(f, phi)`.
pub fn psi(f: f64, phi: f64, cfg: &ArrayConfig) -> f64 {
    TAU * ((cfg.carrier_freq + f) * cfg.spacing_delay() * phi.sin() + f * cfg.ttd_delay)
}

/// Closed-form `sum_{m=0}^{M-1} e^{-j m psi}`.
pub fn response_from_phase(psi: f64, num_elements: usize) -> Complex64 {
    let m = num_elements as f64;
    let x = wrap_phase(psi);
    if x == 0.0 {
        return Complex64::new(m, 0.0);
    }
    let half = 0.5 * x;
    let s = half.sin();
    let linear_phase = Complex64::from_polar(1.0, -(m - 1.0) * half);
    if s.abs() < SINGULAR_THRESHOLD {
        return linear_phase * m;
    }
    linear_phase * ((m * half).sin() / s)
}

/// Array response `H(f, phi)`.
pub fn array_response(f: f64, phi: f64, cfg: &ArrayConfig) -> Complex64 {
    response_from_phase(psi(f, phi, cfg), cfg.num_elements)
}

/// Noise-free received spectrum `Y_n = X_n H(f_n, phi)`.
pub fn noise_free_signal(
    phi: f64,
    grid: &FrequencyGrid,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
) -> Vec<Complex64> {
    let amp = sig.amplitude();
    grid.freqs()
        .iter()
        .map(|&f| array_response(f, phi, cfg) * amp)
        .collect()
}

/// Derivative of the noise-free spectrum with respect to the angle,
/// `dY_n/dphi = -j X_n (d psi/d phi) sum_m m e^{-j m psi}`.
///
/// The index-weighted sum is accumulated term by term rather than through
/// its closed form.
pub fn signal_derivative(
    phi: f64,
    grid: &FrequencyGrid,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
) -> Vec<Complex64> {
    let amp = sig.amplitude();
    grid.freqs()
        .iter()
        .map(|&f| {
            let p = psi(f, phi, cfg);
            let weighted: Complex64 = (1..cfg.num_elements)
                .map(|m| Complex64::from_polar(m as f64, -(m as f64) * p))
                .sum();
            Complex64::new(0.0, -cfg.phase_slope(f, phi)) * weighted * amp
        })
        .collect()
}

pub fn noise_rng(seed: u64) -> NoiseRng {
    NoiseRng::seed_from_u64(seed)
}

/// Draws `len` i.i.d. circularly-symmetric complex Gaussian samples with
/// total variance `variance` (each quadrature carries `variance / 2`).
pub fn complex_gaussian_noise<R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    variance: f64,
) -> Vec<Complex64> {
    let sigma = (0.5 * variance).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sigma * re, sigma * im)
        })
        .collect()
}

/// Noisy snapshot at `snr_db` per-bin SNR, reproducible from `seed`.
pub fn generate_observation(
    phi: f64,
    snr_db: f64,
    seed: u64,
    grid: &FrequencyGrid,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
) -> Result<Observation> {
    let mut obs = noiseless_observation(phi, snr_db, grid, sig, cfg)?;
    let mut rng = noise_rng(seed);
    let noise = complex_gaussian_noise(&mut rng, grid.len(), obs.noise_variance);
    for (z, v) in obs.samples.iter_mut().zip(noise) {
        *z += v;
    }
    obs.rng_seed = seed;
    obs.noiseless = false;
    Ok(obs)
}

/// Snapshot with the noise draw skipped (`Z = Y`); the nominal noise
/// variance for `snr_db` is still recorded.
pub fn noiseless_observation(
    phi: f64,
    snr_db: f64,
    grid: &FrequencyGrid,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
) -> Result<Observation> {
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", format!("{snr_db} is not finite")));
    }
    grid.check_against(cfg)?;
    Ok(Observation {
        samples: noise_free_signal(phi, grid, sig, cfg),
        noise_variance: sig.noise_variance(snr_db),
        rng_seed: 0,
        true_angle: phi,
        noiseless: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct_sum(psi: f64, m: usize) -> Complex64 {
        (0..m)
            .map(|k| Complex64::from_polar(1.0, -(k as f64) * psi))
            .sum()
    }

    #[test]
    fn psi_examples() {
        let cfg = ArrayConfig::default();
        assert_eq!(psi(0.0, 0.0, &cfg), 0.0);

        let cfg = ArrayConfig {
            element_spacing: 0.04,
            carrier_freq: 3.75e9,
            wave_speed: 3e8,
            ..ArrayConfig::default()
        };
        let v = psi(0.0, 30f64.to_radians(), &cfg);
        assert!((v - PI / 2.0).abs() < 1e-12, "{v}");

        let cfg = ArrayConfig {
            ttd_delay: 50e-9,
            ..ArrayConfig::default()
        };
        let v = psi(10e6, 0.0, &cfg);
        assert!((v - PI).abs() < 1e-12, "{v}");
    }

    #[test]
    fn response_at_zero_phase_is_exact() {
        let cfg = ArrayConfig {
            ttd_delay: 123e-9,
            ..ArrayConfig::default()
        };
        let h = array_response(0.0, 0.0, &cfg);
        assert_eq!(h, Complex64::new(8.0, 0.0));
        assert_eq!(response_from_phase(4.0 * TAU, 5).norm(), 5.0);
    }

    #[test]
    fn response_near_singularity_matches_sum() {
        for m in [2, 7, 8, 33, 64] {
            for k in -3..=3 {
                for offset in [1e-12, -3e-9, 1e-8, 5e-7, -1e-6] {
                    let p = TAU * k as f64 + offset;
                    let got = response_from_phase(p, m);
                    let want = direct_sum(p, m);
                    assert!((got - want).norm() <= 1e-10 * want.norm(), "m={m} psi={p}");
                }
            }
        }
    }

    #[test]
    fn flat_broadside_signal_without_delay() {
        let cfg = ArrayConfig {
            ttd_delay: 0.0,
            ..ArrayConfig::default()
        };
        let grid = FrequencyGrid::for_array(64, &cfg).unwrap();
        let sig = SignalSpec::new(2.0, cfg.bandwidth).unwrap();
        let y = noise_free_signal(0.0, &grid, &sig, &cfg);
        for v in y {
            assert!(
                (v - Complex64::new(8.0 * sig.amplitude(), 0.0)).norm() < 1e-12 * sig.amplitude()
            );
        }
    }

    #[test]
    fn peak_bin_is_nearest_zero_frequency() {
        let cfg = ArrayConfig::default();
        let grid = FrequencyGrid::for_array(512, &cfg).unwrap();
        let y = noise_free_signal(0.0, &grid, &SignalSpec::unit(cfg.bandwidth), &cfg);
        let best = (0..y.len())
            .max_by(|&a, &b| y[a].norm().total_cmp(&y[b].norm()))
            .unwrap();
        let nearest = (0..grid.len())
            .min_by(|&a, &b| grid.freqs()[a].abs().total_cmp(&grid.freqs()[b].abs()))
            .unwrap();
        // two bins straddle f = 0 symmetrically
        assert!(best == nearest || best + 1 == nearest || best == nearest + 1);
        assert!(grid.freqs()[best].abs() <= grid.spacing());
    }

    #[test]
    fn grid_layout() {
        let grid = FrequencyGrid::new(512, 20e6).unwrap();
        let f = grid.freqs();
        assert_eq!(f.len(), 512);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!(f[0] > -10e6 && f[511] < 10e6);
        for w in f.windows(2) {
            assert!((w[1] - w[0] - grid.spacing()).abs() < 1e-6);
        }
    }

    #[test]
    fn signal_energy_normalisation() {
        let grid = FrequencyGrid::new(300, 20e6).unwrap();
        let sig = SignalSpec::new(3.5, 20e6).unwrap();
        let energy: f64 = grid
            .freqs()
            .iter()
            .map(|_| sig.bin_power() * grid.spacing())
            .sum();
        assert!((energy - 3.5).abs() < 1e-12 * 3.5);
    }

    #[test]
    fn config_validation() {
        assert!(ArrayConfig::new(1, 0.04, 3.75e9, 20e6, 5e-8, 3e8).is_err());
        assert!(ArrayConfig::new(8, 0.0, 3.75e9, 20e6, 5e-8, 3e8).is_err());
        assert!(ArrayConfig::new(8, 0.04, 3.75e9, 20e6, -1.0, 3e8).is_err());
        assert!(ArrayConfig::new(8, 0.04, 1e6, 2e6, 5e-8, 3e8).is_err());
        assert!(ArrayConfig::new(8, 0.04, 3.75e9, 20e6, 0.0, 3e8).is_ok());
    }

    #[test]
    fn noiseless_path_returns_signal() {
        let cfg = ArrayConfig::default();
        let grid = FrequencyGrid::for_array(128, &cfg).unwrap();
        let sig = SignalSpec::unit(cfg.bandwidth);
        let obs = noiseless_observation(0.3, 5.0, &grid, &sig, &cfg).unwrap();
        assert_eq!(obs.samples, noise_free_signal(0.3, &grid, &sig, &cfg));
        assert!(generate_observation(0.3, f64::NAN, 1, &grid, &sig, &cfg).is_err());
    }

    #[test]
    fn same_seed_same_snapshot() {
        let cfg = ArrayConfig::default();
        let grid = FrequencyGrid::for_array(256, &cfg).unwrap();
        let sig = SignalSpec::unit(cfg.bandwidth);
        let a = generate_observation(0.1, -3.0, 99, &grid, &sig, &cfg).unwrap();
        let b = generate_observation(0.1, -3.0, 99, &grid, &sig, &cfg).unwrap();
        let c = generate_observation(0.1, -3.0, 100, &grid, &sig, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn wrap_phase_range() {
        for p in [-100.0, -PI, -1.0, 0.0, 3.0, PI, 7.0, 1e4] {
            let w = wrap_phase(p);
            assert!((-PI..=PI).contains(&w));
            assert!(((p - w) / TAU - ((p - w) / TAU).round()).abs() < 1e-9);
        }
    }
}
