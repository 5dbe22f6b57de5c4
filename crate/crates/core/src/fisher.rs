//! Fisher information and Cramér-Rao bounds for the angle of arrival.
//!
//! The information carried by bin `n` is proportional to
//! `kappa_n = |sum_m m e^{-j m psi_n}|^2`, the squared index-weighted array
//! sum. Three routes to `I(phi)` are provided:
//!
//! * [`fisher_information_exact`] sums `(2/sigma^2) |dY_n/dphi|^2` bin by bin,
//! * [`fisher_information_moments`] uses the frequency moments
//!   `kappa0 = E[kappa]`, `kappa1 = E[f kappa]`, `kappa2 = E[f^2 kappa]` under a
//!   uniform frequency on the band,
//! * [`crb_simplified`] keeps only the `f_c^2 kappa0` term, which dominates
//!   when `f_c^2 >> B^2`.
//!
//! With a flat spectrum `|X_n|^2 = E_s / B` the moment form reads
//! `I = (2 E_s N / (B sigma^2)) (2 pi (d/c) cos phi)^2 [kappa2 + 2 f_c kappa1 + f_c^2 kappa0]`
//! and coincides with the per-bin sum when the moments are evaluated on the
//! same midpoints as the bins.

use std::f64::consts::TAU;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::array::{
    midpoints, psi, wrap_phase, ArrayConfig, FrequencyGrid, SignalSpec, SINGULAR_THRESHOLD,
};
use crate::error::{Error, Result};

/// Default floor for dB maps of `kappa`.
pub const DEFAULT_FLOOR_DB: f64 = -100.0;

/// Closed-form `|sum_{m=0}^{M-1} m e^{-j m psi}|^2`.
pub fn kappa_from_phase(psi: f64, num_elements: usize) -> f64 {
    let m = num_elements as f64;
    let x = wrap_phase(psi);
    let s = (0.5 * x).sin();
    if s.abs() < SINGULAR_THRESHOLD {
        let peak = 0.5 * m * (m - 1.0);
        return peak * peak;
    }
    // 1 - M cos((M-1)x) + (M-1) cos(Mx) with cos t = 1 - 2 sin^2(t/2); the
    // constant terms cancel exactly, which keeps small |x| accurate.
    let a = ((m - 1.0) * 0.5 * x).sin();
    let b = (m * 0.5 * x).sin();
    let re = 2.0 * m * a * a - 2.0 * (m - 1.0) * b * b;
    let im = m * ((m - 1.0) * x).sin() - (m - 1.0) * (m * x).sin();
    let s2 = s * s;
    (re * re + im * im) / (16.0 * s2 * s2)
}

/// `kappa(f, phi)` for the configured array.
pub fn kappa(f: f64, phi: f64, cfg: &ArrayConfig) -> f64 {
    kappa_from_phase(psi(f, phi, cfg), cfg.num_elements)
}

/// Largest value `kappa` can take, `(M (M - 1) / 2)^2`.
pub fn kappa_peak(num_elements: usize) -> f64 {
    let m = num_elements as f64;
    let p = 0.5 * m * (m - 1.0);
    p * p
}

pub fn to_db(value: f64, floor_db: f64) -> f64 {
    let db = 10.0 * value.log10();
    if db.is_nan() || db < floor_db {
        floor_db
    } else {
        db
    }
}

/// `10 log10 kappa` on the outer product of `f_points` (rows) and
/// `phi_points` (columns), clamped below at `floor_db`.
pub fn kappa_grid(
    f_points: &[f64],
    phi_points: &[f64],
    cfg: &ArrayConfig,
    floor_db: f64,
) -> Result<Vec<Vec<f64>>> {
    if f_points.is_empty() || phi_points.is_empty() {
        return Err(Error::invalid(
            "kappa_grid",
            "frequency and angle lists must be non-empty",
        ));
    }
    Ok(f_points
        .iter()
        .map(|&f| {
            phi_points
                .iter()
                .map(|&phi| to_db(kappa(f, phi, cfg), floor_db))
                .collect()
        })
        .collect())
}

/// Frequency moments of `kappa` under `f ~ U(-B/2, B/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaMoments {
    /// `E[kappa]`.
    pub kappa0: f64,
    /// `E[f kappa]`, Hz.
    pub kappa1: f64,
    /// `E[f^2 kappa]`, Hz^2.
    pub kappa2: f64,
    /// Midpoints used by the final quadrature.
    pub quadrature_bins: usize,
    pub phi: f64,
}

impl KappaMoments {
    /// `kappa2 + 2 f_c kappa1 + f_c^2 kappa0 = E[(f + f_c)^2 kappa]`.
    pub fn weighted_sum(&self, carrier_freq: f64) -> f64 {
        self.kappa2 + 2.0 * carrier_freq * self.kappa1 + carrier_freq * carrier_freq * self.kappa0
    }
}

/// How the moment integrals are discretised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quadrature {
    /// Plain midpoint rule on exactly this many cells.
    Fixed(usize),
    /// Midpoint rule refined by doubling until successive results agree.
    ///
    /// Agreement is measured per moment against its natural scale:
    /// `kappa0`, `(B/2) kappa0` and `kappa2` respectively, since `kappa1`
    /// can vanish.
    Converged {
        initial_bins: usize,
        rel_tol: f64,
        max_doublings: u32,
    },
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature::Converged {
            initial_bins: 4096,
            rel_tol: 1e-6,
            max_doublings: 8,
        }
    }
}

pub const MIN_QUADRATURE_BINS: usize = 64;

fn check_bins(bins: usize) -> Result<()> {
    if bins < MIN_QUADRATURE_BINS {
        return Err(Error::invalid(
            "quad_bins",
            format!("{bins} quadrature bins requested, at least {MIN_QUADRATURE_BINS} needed"),
        ));
    }
    Ok(())
}

fn midpoint_moments(phi: f64, cfg: &ArrayConfig, bins: usize) -> KappaMoments {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for f in midpoints(bins, cfg.bandwidth) {
        let k = kappa(f, phi, cfg);
        s0 += k;
        s1 += f * k;
        s2 += f * f * k;
    }
    let n = bins as f64;
    KappaMoments {
        kappa0: s0 / n,
        kappa1: s1 / n,
        kappa2: s2 / n,
        quadrature_bins: bins,
        phi,
    }
}

fn moment_change(a: &KappaMoments, b: &KappaMoments, half_band: f64) -> f64 {
    let d0 = (a.kappa0 - b.kappa0).abs() / b.kappa0;
    let d1 = (a.kappa1 - b.kappa1).abs() / (half_band * b.kappa0);
    let d2 = (a.kappa2 - b.kappa2).abs() / b.kappa2;
    d0.max(d1).max(d2)
}

/// `kappa0`, `kappa1`, `kappa2` at angle `phi`.
pub fn kappa_moments(phi: f64, cfg: &ArrayConfig, quad: Quadrature) -> Result<KappaMoments> {
    match quad {
        Quadrature::Fixed(bins) => {
            check_bins(bins)?;
            Ok(midpoint_moments(phi, cfg, bins))
        }
        Quadrature::Converged {
            initial_bins,
            rel_tol,
            max_doublings,
        } => {
            check_bins(initial_bins)?;
            let half_band = 0.5 * cfg.bandwidth;
            let mut bins = initial_bins;
            let mut prev = midpoint_moments(phi, cfg, bins);
            let mut change = f64::INFINITY;
            for _ in 0..max_doublings {
                bins *= 2;
                let next = midpoint_moments(phi, cfg, bins);
                change = moment_change(&prev, &next, half_band);
                if change < rel_tol {
                    return Ok(next);
                }
                prev = next;
            }
            Err(Error::NotConverged {
                bins,
                change,
                tol: rel_tol,
            })
        }
    }
}

/// Which route produced a [`FisherResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherMethod {
    ExactSum,
    MomentForm,
    Simplified,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherResult {
    /// `I(phi)` in 1/rad^2.
    pub fisher_info: f64,
    /// `1 / I(phi)` in rad^2, `+inf` when the information vanishes.
    pub crb: f64,
    pub method: FisherMethod,
}

impl FisherResult {
    fn from_info(fisher_info: f64, method: FisherMethod) -> Self {
        let fisher_info = fisher_info.max(0.0);
        let crb = if fisher_info > 0.0 {
            1.0 / fisher_info
        } else {
            f64::INFINITY
        };
        FisherResult {
            fisher_info,
            crb,
            method,
        }
    }
}

/// `cos(phi)`, snapped to zero at the endfire directions where it only
/// differs from zero by rounding.
fn angle_cos(phi: f64) -> f64 {
    let c = phi.cos();
    if c.abs() < 4.0 * f64::EPSILON {
        0.0
    } else {
        c
    }
}

fn check_variance(noise_variance: f64) -> Result<()> {
    if noise_variance.is_finite() && noise_variance > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "noise_variance",
            format!("{noise_variance} must be finite and > 0"),
        ))
    }
}

/// `I(phi) = (2/sigma^2) sum_n |X_n|^2 (2 pi (f_n + f_c) (d/c) cos phi)^2 kappa_n`.
pub fn fisher_information_exact(
    phi: f64,
    grid: &FrequencyGrid,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
    noise_variance: f64,
) -> Result<FisherResult> {
    check_variance(noise_variance)?;
    grid.check_against(cfg)?;
    let cos_phi = angle_cos(phi);
    let dc = cfg.spacing_delay();
    let sum: f64 = grid
        .freqs()
        .iter()
        .map(|&f| {
            let slope = TAU * (f + cfg.carrier_freq) * dc * cos_phi;
            slope * slope * kappa(f, phi, cfg)
        })
        .sum();
    let info = 2.0 * sig.bin_power() * sum / noise_variance;
    Ok(FisherResult::from_info(info, FisherMethod::ExactSum))
}

/// Moment form of `I(phi)` for `num_bins` observed bins.
pub fn fisher_information_moments(
    phi: f64,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
    noise_variance: f64,
    num_bins: usize,
    quad: Quadrature,
) -> Result<FisherResult> {
    check_variance(noise_variance)?;
    let moments = kappa_moments(phi, cfg, quad)?;
    let slope = TAU * cfg.spacing_delay() * angle_cos(phi);
    let info = prefactor(sig, cfg, noise_variance, num_bins)
        * slope
        * slope
        * moments.weighted_sum(cfg.carrier_freq);
    Ok(FisherResult::from_info(info, FisherMethod::MomentForm))
}

/// `2 E_s N / (B sigma^2)`, i.e. `2 N |X_n|^2 / sigma^2`.
fn prefactor(sig: &SignalSpec, cfg: &ArrayConfig, noise_variance: f64, num_bins: usize) -> f64 {
    2.0 * sig.total_energy() * num_bins as f64 / (cfg.bandwidth * noise_variance)
}

/// Narrowband information `(2 E_s N kappa0 / (B sigma^2)) (2 pi f_c (d/c) cos phi)^2`.
pub fn fisher_information_simplified(
    phi: f64,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
    noise_variance: f64,
    num_bins: usize,
    quad: Quadrature,
) -> Result<FisherResult> {
    check_variance(noise_variance)?;
    let kappa0 = kappa_moments(phi, cfg, quad)?.kappa0;
    let slope = TAU * cfg.carrier_freq * cfg.spacing_delay() * angle_cos(phi);
    let info = prefactor(sig, cfg, noise_variance, num_bins) * kappa0 * slope * slope;
    Ok(FisherResult::from_info(info, FisherMethod::Simplified))
}

/// Narrowband Cramér-Rao bound in rad^2; `+inf` at `cos(phi) = 0`.
pub fn crb_simplified(
    phi: f64,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
    noise_variance: f64,
    num_bins: usize,
) -> Result<f64> {
    fisher_information_simplified(
        phi,
        sig,
        cfg,
        noise_variance,
        num_bins,
        Quadrature::default(),
    )
    .map(|r| r.crb)
}

/// Angles over which the bandwidth sweep averages the moments.
pub fn bandwidth_sweep_angles() -> Vec<f64> {
    (0..121).map(|i| (-60.0 + i as f64).to_radians()).collect()
}

/// One `(beta, M)` cell of [`kappa_bandwidth_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthRow {
    pub beta: f64,
    pub num_elements: usize,
    /// Angle-averaged moments.
    pub mean_kappa0: f64,
    pub mean_kappa1: f64,
    pub mean_kappa2: f64,
}

impl BandwidthRow {
    pub fn kappa0_db(&self) -> f64 {
        to_db(self.mean_kappa0, f64::NEG_INFINITY)
    }

    pub fn kappa1_db(&self) -> f64 {
        to_db(self.mean_kappa1.abs(), f64::NEG_INFINITY)
    }

    pub fn kappa1_sign(&self) -> i8 {
        if self.mean_kappa1 < 0.0 {
            -1
        } else {
            1
        }
    }

    pub fn kappa2_db(&self) -> f64 {
        to_db(self.mean_kappa2, f64::NEG_INFINITY)
    }

    /// `2 f_c |kappa1|` relative to `f_c^2 kappa0`.
    pub fn linear_term_ratio(&self, carrier_freq: f64) -> f64 {
        2.0 * self.mean_kappa1.abs() / (carrier_freq * self.mean_kappa0)
    }

    /// `kappa2` relative to `f_c^2 kappa0`.
    pub fn quadratic_term_ratio(&self, carrier_freq: f64) -> f64 {
        self.mean_kappa2 / (carrier_freq * carrier_freq * self.mean_kappa0)
    }
}

/// Angle-averaged kappa moments over relative bandwidth and array size.
///
/// For every `(beta, M)` the band is set to `B = beta f_c` and the delay
/// line to `tau_d = 1/B`; the moments are averaged over
/// [`bandwidth_sweep_angles`]. Rows are ordered by `beta`, then `M`.
pub fn kappa_bandwidth_sweep(
    betas: &[f64],
    element_counts: &[usize],
    base: &ArrayConfig,
    quad: Quadrature,
) -> Result<Vec<BandwidthRow>> {
    let mut cells = Vec::with_capacity(betas.len() * element_counts.len());
    for &beta in betas {
        if !(beta > 0.0 && beta < 2.0) {
            return Err(Error::invalid("beta", format!("{beta} must lie in (0, 2)")));
        }
        for &m in element_counts {
            let bandwidth = beta * base.carrier_freq;
            let cfg = ArrayConfig {
                num_elements: m,
                bandwidth,
                ttd_delay: 1.0 / bandwidth,
                ..base.clone()
            };
            cfg.validate()?;
            cells.push((beta, cfg));
        }
    }
    let angles = bandwidth_sweep_angles();
    let eval = |(beta, cfg): &(f64, ArrayConfig)| -> Result<BandwidthRow> {
        let mut sums = [0.0; 3];
        for &phi in &angles {
            let k = kappa_moments(phi, cfg, quad)?;
            sums[0] += k.kappa0;
            sums[1] += k.kappa1;
            sums[2] += k.kappa2;
        }
        let n = angles.len() as f64;
        Ok(BandwidthRow {
            beta: *beta,
            num_elements: cfg.num_elements,
            mean_kappa0: sums[0] / n,
            mean_kappa1: sums[1] / n,
            mean_kappa2: sums[2] / n,
        })
    };
    #[cfg(feature = "parallel")]
    let rows = cells.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let rows = cells.iter().map(eval).collect();
    rows
}
