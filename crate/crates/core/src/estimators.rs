//! Angle estimators: grid-search maximum likelihood and the delay-line
//! peak method.
//!
//! The ML estimator scans a finite set of candidate angles and keeps the one
//! whose noise-free spectrum is closest to the observation in the least
//! squares sense (the Gaussian likelihood is monotone in that residual). The
//! peak estimator smooths the received power across bins, picks the
//! strongest bin and inverts the beam-squint relation
//! `phi = arcsin(-(f tau_d / (f + f_c)) (c / d))`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::array::{noise_free_signal, ArrayConfig, FrequencyGrid, Observation, SignalSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EstimatorKind {
    Ml,
    Peak,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Ml => "ml",
            EstimatorKind::Peak => "peak",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml" => Ok(EstimatorKind::Ml),
            "peak" => Ok(EstimatorKind::Peak),
            other => Err(Error::invalid(
                "estimator",
                format!("unknown estimator {other:?} (expected ml or peak)"),
            )),
        }
    }
}

/// Uniformly spaced candidate angles, radians, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    angles: Vec<f64>,
    resolution: f64,
}

impl Default for AngleGrid {
    /// 0.05 degree steps over [-60, 60] degrees.
    fn default() -> Self {
        AngleGrid::uniform_deg(-60.0, 60.0, 0.05).expect("default angle grid is valid")
    }
}

impl AngleGrid {
    /// Grid from `min_deg` to `max_deg` in steps of `res_deg`. The span must
    /// be a whole number of steps.
    pub fn uniform_deg(min_deg: f64, max_deg: f64, res_deg: f64) -> Result<Self> {
        if !(res_deg.is_finite() && res_deg > 0.0) {
            return Err(Error::invalid(
                "grid_res_deg",
                format!("{res_deg} must be > 0"),
            ));
        }
        if !(min_deg.is_finite() && max_deg.is_finite() && min_deg <= max_deg) {
            return Err(Error::invalid(
                "angle_grid",
                format!("bounds [{min_deg}, {max_deg}] are not an ordered finite range"),
            ));
        }
        if min_deg <= -90.0 || max_deg >= 90.0 {
            return Err(Error::invalid(
                "angle_grid",
                format!("bounds [{min_deg}, {max_deg}] must lie strictly inside (-90, 90)"),
            ));
        }
        let steps = (max_deg - min_deg) / res_deg;
        let count = steps.round();
        if (steps - count).abs() > 1e-6 {
            return Err(Error::invalid(
                "grid_res_deg",
                format!("{res_deg} does not divide the span [{min_deg}, {max_deg}]"),
            ));
        }
        let angles = (0..=count as usize)
            .map(|i| (min_deg + i as f64 * res_deg).to_radians())
            .collect();
        Ok(AngleGrid {
            angles,
            resolution: res_deg.to_radians(),
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }
}

/// Peak-method settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakConfig {
    /// Width `b` of the rectangular smoothing window, odd.
    pub window_size: usize,
    /// Saturate out-of-range arcsin arguments at +-1 instead of failing.
    pub clamp_out_of_range: bool,
}

impl Default for PeakConfig {
    fn default() -> Self {
        PeakConfig {
            window_size: 5,
            clamp_out_of_range: true,
        }
    }
}

impl PeakConfig {
    pub fn validate(&self, num_bins: usize) -> Result<()> {
        check_window(self.window_size, num_bins)
    }
}

fn check_window(b: usize, n: usize) -> Result<()> {
    if b == 0 || b.is_multiple_of(2) || b > n {
        return Err(Error::invalid(
            "window_b",
            format!("window size {b} must be odd and within 1..={n}"),
        ));
    }
    Ok(())
}

/// Method-specific information attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Diagnostic {
    Ml {
        /// `sum_n |Z_n - Y_n(phi_hat)|^2`.
        residual: f64,
        candidate_index: usize,
    },
    Peak {
        freq_hz: f64,
        smoothed_power: f64,
        clamped: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub phi_hat: f64,
    pub method: EstimatorKind,
    pub diagnostic: Diagnostic,
}

/// Grid-search ML estimator with the candidate spectra precomputed.
///
/// Since `|Z - Y|^2 = |Z|^2 + |Y|^2 - 2 Re<Y, Z>`, each candidate costs one
/// real dot product of length `2N` against the observation.
#[derive(Debug, Clone)]
pub struct MlEstimator {
    grid: AngleGrid,
    num_bins: usize,
    /// Candidate spectra, interleaved re/im, one row of `2N` per angle.
    candidates: Vec<f64>,
    energies: Vec<f64>,
}

impl MlEstimator {
    pub fn new(
        grid: &AngleGrid,
        fgrid: &FrequencyGrid,
        sig: &SignalSpec,
        cfg: &ArrayConfig,
    ) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::invalid("angle_grid", "no candidate angles"));
        }
        fgrid.check_against(cfg)?;
        let n = fgrid.len();
        let mut candidates = Vec::with_capacity(grid.len() * 2 * n);
        let mut energies = Vec::with_capacity(grid.len());
        for &phi in grid.angles() {
            let y = noise_free_signal(phi, fgrid, sig, cfg);
            energies.push(y.iter().map(|v| v.norm_sqr()).sum());
            candidates.extend(y.iter().flat_map(|v| [v.re, v.im]));
        }
        Ok(MlEstimator {
            grid: grid.clone(),
            num_bins: n,
            candidates,
            energies,
        })
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    /// Candidate minimising the residual; the first (smallest) angle wins ties.
    pub fn estimate(&self, obs: &Observation) -> Result<EstimateResult> {
        let n = self.num_bins;
        if obs.samples.len() != n {
            return Err(Error::invalid(
                "observation",
                format!("{} samples, expected {n}", obs.samples.len()),
            ));
        }
        let z: Vec<f64> = obs.samples.iter().flat_map(|v| [v.re, v.im]).collect();
        let z_energy: f64 = obs.samples.iter().map(|v| v.norm_sqr()).sum();
        let mut best = (0, f64::INFINITY);
        for (k, (row, &energy)) in self
            .candidates
            .chunks_exact(2 * n)
            .zip(&self.energies)
            .enumerate()
        {
            let residual = z_energy + energy - 2.0 * dot(row, &z);
            if residual < best.1 {
                best = (k, residual);
            }
        }
        let row = &self.candidates[best.0 * 2 * n..(best.0 + 1) * 2 * n];
        let residual = row
            .chunks_exact(2)
            .zip(&obs.samples)
            .map(|(y, zv)| (zv - Complex64::new(y[0], y[1])).norm_sqr())
            .sum();
        Ok(EstimateResult {
            phi_hat: self.grid.angles()[best.0],
            method: EstimatorKind::Ml,
            diagnostic: Diagnostic::Ml {
                residual,
                candidate_index: best.0,
            },
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

/// One-shot ML estimate; builds the candidate dictionary on every call.
pub fn ml_estimate(
    obs: &Observation,
    grid: &AngleGrid,
    fgrid: &FrequencyGrid,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
) -> Result<EstimateResult> {
    MlEstimator::new(grid, fgrid, sig, cfg)?.estimate(obs)
}

/// Circular moving sum of `|Z_n|^2` over a centred window of odd width `b`.
pub fn smooth_circular(z: &[Complex64], b: usize) -> Result<Vec<f64>> {
    let n = z.len();
    check_window(b, n)?;
    let power: Vec<f64> = z.iter().map(|v| v.norm_sqr()).collect();
    let half = b / 2;
    Ok((0..n)
        .map(|i| (0..b).map(|k| power[(i + n + k - half) % n]).sum())
        .collect())
}

/// Angle addressed by the delay line at baseband frequency `f`.
///
/// Returns the angle and whether the arcsin argument had to be clamped.
pub fn peak_freq_to_angle(f: f64, cfg: &ArrayConfig, clamp: bool) -> Result<(f64, bool)> {
    if cfg.ttd_delay <= 0.0 {
        return Err(Error::Degenerate(
            "tau_d = 0 maps every frequency to broadside".into(),
        ));
    }
    let argument = -(f * cfg.ttd_delay) / (f + cfg.carrier_freq) / cfg.spacing_delay();
    if argument.abs() <= 1.0 {
        Ok((argument.asin(), false))
    } else if clamp {
        Ok((argument.signum().asin(), true))
    } else {
        Err(Error::Range {
            freq_hz: f,
            argument,
        })
    }
}

/// Baseband frequency at which the array response peaks for angle `phi`,
/// `f* = -f_c (d/c) sin(phi) / ((d/c) sin(phi) + tau_d)`.
pub fn invert_angle_to_peak_freq(phi: f64, cfg: &ArrayConfig) -> Result<f64> {
    if phi.is_nan() || phi.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::invalid(
            "phi",
            format!("{phi} rad is not inside (-pi/2, pi/2)"),
        ));
    }
    let spatial = cfg.spacing_delay() * phi.sin();
    let denom = spatial + cfg.ttd_delay;
    if denom.abs() <= 1e-12 * (cfg.spacing_delay() + cfg.ttd_delay) {
        return Err(Error::Degenerate(format!(
            "(d/c) sin(phi) + tau_d vanishes at phi = {phi} rad"
        )));
    }
    Ok(-cfg.carrier_freq * spatial / denom)
}

/// Peak-method estimate: strongest smoothed bin, lowest frequency on ties.
pub fn peak_estimate(
    obs: &Observation,
    pcfg: &PeakConfig,
    fgrid: &FrequencyGrid,
    cfg: &ArrayConfig,
) -> Result<EstimateResult> {
    if obs.samples.len() != fgrid.len() {
        return Err(Error::invalid(
            "observation",
            format!("{} samples, expected {}", obs.samples.len(), fgrid.len()),
        ));
    }
    pcfg.validate(fgrid.len())?;
    let smoothed = smooth_circular(&obs.samples, pcfg.window_size)?;
    let (bin, power) = smoothed
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &p)| {
            if p > best.1 {
                (i, p)
            } else {
                best
            }
        });
    let freq = fgrid.freqs()[bin];
    let (phi_hat, clamped) = peak_freq_to_angle(freq, cfg, pcfg.clamp_out_of_range)?;
    Ok(EstimateResult {
        phi_hat,
        method: EstimatorKind::Peak,
        diagnostic: Diagnostic::Peak {
            freq_hz: freq,
            smoothed_power: power,
            clamped,
        },
    })
}
