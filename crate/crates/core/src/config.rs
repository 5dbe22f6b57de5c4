//! Run configuration: a flat TOML file with one section per subsystem,
//! overridable key by key from the command line.
//!
//! ```toml
//! [array]
//! m_set = [8, 16, 32]
//! element_spacing = 0.04
//! carrier_freq = "3.75 GHz"
//! bandwidth = "20 MHz"
//! ttd_delay = "auto"      # 1 / bandwidth
//! num_bins = 512
//!
//! [sweep]
//! snr_min = -20
//! snr_max = 10
//! snr_step = 5
//! trials = 10000
//! seed = 0
//! angle_mode = "fixed"
//! phi_deg = 0
//!
//! [estimators]
//! grid_res_deg = 0.05
//! window_b = 5
//! ```
//!
//! Frequencies accept plain numbers (Hz) or strings with a `Hz`, `kHz`,
//! `MHz` or `GHz` suffix. Unknown keys are rejected. A `[manifest]` section,
//! as written next to every CSV, is accepted and ignored so manifests can be
//! fed back in to reproduce a run.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{ArrayConfig, SignalSpec, DEFAULT_WAVE_SPEED};
use crate::estimators::{AngleGrid, EstimatorKind, PeakConfig};
use crate::fisher::{Quadrature, DEFAULT_FLOOR_DB};
use crate::montecarlo::{AngleMode, ErrorUnits, Execution, RangePolicy, SweepConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },
}

impl ConfigError {
    fn validation(key: &str, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<crate::Error> for ConfigError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Invalid { field, reason } => ConfigError::validation(field, reason),
            other => ConfigError::validation("config", other.to_string()),
        }
    }
}

/// A frequency written either as a number of Hz or as text with a unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Frequency {
    Hz(f64),
    Text(String),
}

impl Frequency {
    pub fn to_hz(&self) -> Result<f64, String> {
        match self {
            Frequency::Hz(v) => Ok(*v),
            Frequency::Text(s) => parse_frequency(s),
        }
    }
}

/// Parses `"3.75 GHz"`, `"20MHz"`, `"1e6"` and friends into Hz.
pub fn parse_frequency(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let lower = t.to_ascii_lowercase();
    let (number, scale) = [("ghz", 1e9), ("mhz", 1e6), ("khz", 1e3), ("hz", 1.0)]
        .iter()
        .find_map(|&(suffix, scale)| {
            lower
                .strip_suffix(suffix)
                .map(|n| (n.trim().to_string(), scale))
        })
        .unwrap_or((lower.clone(), 1.0));
    number
        .parse::<f64>()
        .map(|v| v * scale)
        .map_err(|_| format!("{text:?} is not a frequency (expected e.g. 20MHz or 2e7)"))
}

/// `tau_d` as seconds or `"auto"` for `1 / bandwidth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Delay {
    Seconds(f64),
    Text(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_set: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub element_spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub carrier_freq: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<Frequency>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ttd_delay: Option<Delay>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave_speed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signal_energy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle_mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimators: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dither: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict_range: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noiseless: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub units: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_min_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_max_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_res_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_b: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub floor_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_bins: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quad_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_min_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_max_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_step_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub betas: Option<Vec<f64>>,
}

/// The file layout; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing)]
    pub manifest: Option<toml::Table>,
    #[serde(default)]
    pub array: ArraySection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub estimators: EstimatorSection,
    #[serde(default)]
    pub kappa: KappaSection,
}

impl RawConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Applies every `Some` key of `other` on top of `self`.
    pub fn merge(mut self, other: RawConfig) -> Self {
        macro_rules! take {
            ($sec:ident: $($f:ident),*) => {
                $( if other.$sec.$f.is_some() { self.$sec.$f = other.$sec.$f; } )*
            };
        }
        take!(array: m_set, element_spacing, carrier_freq, bandwidth, ttd_delay, wave_speed, num_bins, signal_energy);
        take!(sweep: snr_min, snr_max, snr_step, trials, seed, angle_mode, phi_deg, angles_deg,
              estimators, dither, strict_range, noiseless, units);
        take!(estimators: grid_min_deg, grid_max_deg, grid_res_deg, window_b);
        take!(kappa: floor_db, quad_bins, quad_tol, freq_points, phi_min_deg, phi_max_deg, phi_step_deg, betas);
        self
    }
}

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    /// Array with `num_elements` set to the first entry of `m_set`.
    pub array: ArrayConfig,
    pub m_set: Vec<usize>,
    pub num_bins: usize,
    pub signal: SignalSpec,
    pub snr_grid_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub angle_mode: AngleMode,
    /// Single nominal angle for `estimate`, `check-fi` and `crb`, radians.
    pub phi: f64,
    pub estimators: Vec<EstimatorKind>,
    pub dither: bool,
    pub strict_range: bool,
    pub noiseless: bool,
    pub units: ErrorUnits,
    pub angle_grid: AngleGrid,
    pub window_b: usize,
    pub floor_db: f64,
    pub quadrature: Quadrature,
    pub freq_points: usize,
    /// Angles for `kappa` grids and moment curves, radians.
    pub kappa_angles: Vec<f64>,
    pub betas: Vec<f64>,
    /// The merged key set the run was resolved from, with defaults filled in.
    pub echo: RawConfig,
}

fn inclusive_range(min: f64, max: f64, step: f64, key: &str) -> Result<Vec<f64>, ConfigError> {
    if !(min.is_finite() && max.is_finite() && step.is_finite()) {
        return Err(ConfigError::validation(key, "range bounds must be finite"));
    }
    if max < min {
        return Err(ConfigError::validation(
            key,
            format!("max {max} is below min {min}"),
        ));
    }
    if step <= 0.0 {
        return Err(ConfigError::validation(
            key,
            format!("step {step} must be > 0"),
        ));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

impl ResolvedConfig {
    /// Fills defaults into `raw` and checks every model invariant.
    pub fn resolve(raw: RawConfig) -> Result<Self, ConfigError> {
        let a = &raw.array;
        let hz = |key: &str, f: &Option<Frequency>, default: f64| -> Result<f64, ConfigError> {
            f.as_ref()
                .map(|f| f.to_hz())
                .transpose()
                .map_err(|e| ConfigError::validation(key, e))
                .map(|v| v.unwrap_or(default))
        };
        let carrier_freq = hz("array.carrier_freq", &a.carrier_freq, 3.75e9)?;
        let bandwidth = hz("array.bandwidth", &a.bandwidth, 20e6)?;
        let ttd_delay = match &a.ttd_delay {
            None => 1.0 / bandwidth,
            Some(Delay::Seconds(s)) => *s,
            Some(Delay::Text(t)) if t.trim().eq_ignore_ascii_case("auto") => 1.0 / bandwidth,
            Some(Delay::Text(t)) => {
                return Err(ConfigError::validation(
                    "array.ttd_delay",
                    format!("{t:?} is neither a number of seconds nor \"auto\""),
                ))
            }
        };
        let m_set = a.m_set.clone().unwrap_or_else(|| vec![8, 16, 32]);
        if m_set.is_empty() {
            return Err(ConfigError::validation(
                "array.m_set",
                "needs at least one element count",
            ));
        }
        let array = ArrayConfig {
            num_elements: m_set[0],
            element_spacing: a.element_spacing.unwrap_or(0.04),
            carrier_freq,
            bandwidth,
            ttd_delay,
            wave_speed: a.wave_speed.unwrap_or(DEFAULT_WAVE_SPEED),
        };
        for &m in &m_set {
            array
                .with_elements(m)
                .validate()
                .map_err(|e| prefixed("array", e))?;
        }
        let num_bins = a.num_bins.unwrap_or(512);
        if num_bins == 0 {
            return Err(ConfigError::validation(
                "array.num_bins",
                "must be positive",
            ));
        }
        let signal = match a.signal_energy {
            None => SignalSpec::unit(bandwidth),
            Some(e) => SignalSpec::new(e, bandwidth).map_err(|e| prefixed("array", e))?,
        };

        let s = &raw.sweep;
        let (snr_min, snr_max, snr_step) = (
            s.snr_min.unwrap_or(-20.0),
            s.snr_max.unwrap_or(10.0),
            s.snr_step.unwrap_or(5.0),
        );
        let snr_grid_db = inclusive_range(snr_min, snr_max, snr_step, "sweep.snr")?;
        let trials = s.trials.unwrap_or(10_000);
        if trials == 0 {
            return Err(ConfigError::validation(
                "sweep.trials",
                "must be at least 1",
            ));
        }
        if s.seed.is_some_and(|v| v > i64::MAX as u64) {
            return Err(ConfigError::validation(
                "sweep.seed",
                "must fit in a signed 64-bit integer",
            ));
        }
        let phi_deg = s.phi_deg.unwrap_or(0.0);
        if phi_deg.is_nan() || phi_deg.abs() > 90.0 {
            return Err(ConfigError::validation(
                "sweep.phi_deg",
                format!("{phi_deg} is not inside [-90, 90]"),
            ));
        }
        let phi = phi_deg.to_radians();
        let angle_mode = match s.angle_mode.as_deref().unwrap_or("fixed") {
            "fixed" | "fixed_angle" => AngleMode::Fixed(phi),
            "averaged" => match &s.angles_deg {
                None => AngleMode::averaged_default(),
                Some(list) if list.is_empty() => {
                    return Err(ConfigError::validation(
                        "sweep.angles_deg",
                        "must not be empty",
                    ))
                }
                Some(list) => AngleMode::Averaged(list.iter().map(|d| d.to_radians()).collect()),
            },
            other => {
                return Err(ConfigError::validation(
                    "sweep.angle_mode",
                    format!("{other:?} (expected fixed or averaged)"),
                ))
            }
        };
        let estimators = s
            .estimators
            .clone()
            .unwrap_or_else(|| vec!["ml".into(), "peak".into()])
            .iter()
            .map(|e| e.parse::<EstimatorKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| prefixed("sweep", e))?;
        if estimators.is_empty() {
            return Err(ConfigError::validation(
                "sweep.estimators",
                "needs at least one estimator",
            ));
        }
        if estimators.contains(&EstimatorKind::Peak) && array.ttd_delay <= 0.0 {
            return Err(ConfigError::validation(
                "array.ttd_delay",
                "the peak estimator needs tau_d > 0; its frequency-to-angle map is degenerate at 0",
            ));
        }
        let units = match s.units.as_deref().unwrap_or("deg") {
            "deg" | "degrees" => ErrorUnits::Degrees,
            "rad" | "radians" => ErrorUnits::Radians,
            other => {
                return Err(ConfigError::validation(
                    "sweep.units",
                    format!("{other:?} (expected deg or rad)"),
                ))
            }
        };

        let e = &raw.estimators;
        let angle_grid = AngleGrid::uniform_deg(
            e.grid_min_deg.unwrap_or(-60.0),
            e.grid_max_deg.unwrap_or(60.0),
            e.grid_res_deg.unwrap_or(0.05),
        )
        .map_err(|e| prefixed("estimators", e))?;
        let window_b = e.window_b.unwrap_or(5);
        PeakConfig {
            window_size: window_b,
            clamp_out_of_range: true,
        }
        .validate(num_bins)
        .map_err(|e| prefixed("estimators", e))?;

        let k = &raw.kappa;
        let quad_bins = k.quad_bins.unwrap_or(4096);
        let quadrature = Quadrature::Converged {
            initial_bins: quad_bins,
            rel_tol: k.quad_tol.unwrap_or(1e-6),
            max_doublings: 8,
        };
        if quad_bins < crate::fisher::MIN_QUADRATURE_BINS {
            return Err(ConfigError::validation(
                "kappa.quad_bins",
                format!("{quad_bins} is below 64"),
            ));
        }
        let freq_points = k.freq_points.unwrap_or(201);
        if freq_points == 0 {
            return Err(ConfigError::validation(
                "kappa.freq_points",
                "must be positive",
            ));
        }
        let kappa_angles = inclusive_range(
            k.phi_min_deg.unwrap_or(-60.0),
            k.phi_max_deg.unwrap_or(60.0),
            k.phi_step_deg.unwrap_or(1.0),
            "kappa.phi",
        )?
        .into_iter()
        .map(f64::to_radians)
        .collect();
        let betas = k
            .betas
            .clone()
            .unwrap_or_else(|| vec![0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5]);
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0 && **b < 2.0)) {
            return Err(ConfigError::validation(
                "kappa.betas",
                format!("{b} is outside (0, 2)"),
            ));
        }

        let echo = RawConfig {
            manifest: None,
            array: ArraySection {
                m_set: Some(m_set.clone()),
                element_spacing: Some(array.element_spacing),
                carrier_freq: Some(Frequency::Hz(carrier_freq)),
                bandwidth: Some(Frequency::Hz(bandwidth)),
                ttd_delay: Some(Delay::Seconds(ttd_delay)),
                wave_speed: Some(array.wave_speed),
                num_bins: Some(num_bins),
                signal_energy: Some(signal.total_energy()),
            },
            sweep: SweepSection {
                snr_min: Some(snr_min),
                snr_max: Some(snr_max),
                snr_step: Some(snr_step),
                trials: Some(trials),
                seed: Some(s.seed.unwrap_or(0)),
                angle_mode: Some(
                    match angle_mode {
                        AngleMode::Fixed(_) => "fixed",
                        AngleMode::Averaged(_) => "averaged",
                    }
                    .into(),
                ),
                phi_deg: Some(phi_deg),
                angles_deg: match &angle_mode {
                    AngleMode::Averaged(list) => {
                        Some(list.iter().map(|r| r.to_degrees()).collect())
                    }
                    AngleMode::Fixed(_) => s.angles_deg.clone(),
                },
                estimators: Some(estimators.iter().map(|e| e.to_string()).collect()),
                dither: Some(s.dither.unwrap_or(true)),
                strict_range: Some(s.strict_range.unwrap_or(false)),
                noiseless: Some(s.noiseless.unwrap_or(false)),
                units: Some(
                    match units {
                        ErrorUnits::Degrees => "deg",
                        ErrorUnits::Radians => "rad",
                    }
                    .into(),
                ),
            },
            estimators: EstimatorSection {
                grid_min_deg: Some(e.grid_min_deg.unwrap_or(-60.0)),
                grid_max_deg: Some(e.grid_max_deg.unwrap_or(60.0)),
                grid_res_deg: Some(e.grid_res_deg.unwrap_or(0.05)),
                window_b: Some(window_b),
            },
            kappa: KappaSection {
                floor_db: Some(k.floor_db.unwrap_or(DEFAULT_FLOOR_DB)),
                quad_bins: Some(quad_bins),
                quad_tol: Some(k.quad_tol.unwrap_or(1e-6)),
                freq_points: Some(freq_points),
                phi_min_deg: Some(k.phi_min_deg.unwrap_or(-60.0)),
                phi_max_deg: Some(k.phi_max_deg.unwrap_or(60.0)),
                phi_step_deg: Some(k.phi_step_deg.unwrap_or(1.0)),
                betas: Some(betas.clone()),
            },
        };

        Ok(ResolvedConfig {
            array,
            m_set,
            num_bins,
            signal,
            snr_grid_db,
            trials,
            seed: s.seed.unwrap_or(0),
            angle_mode,
            phi,
            estimators,
            dither: s.dither.unwrap_or(true),
            strict_range: s.strict_range.unwrap_or(false),
            noiseless: s.noiseless.unwrap_or(false),
            units,
            angle_grid,
            window_b,
            floor_db: k.floor_db.unwrap_or(DEFAULT_FLOOR_DB),
            quadrature,
            freq_points,
            kappa_angles,
            betas,
            echo,
        })
    }

    pub fn sweep_config(&self, execution: Execution) -> SweepConfig {
        SweepConfig {
            array: self.array.clone(),
            num_bins: self.num_bins,
            signal: self.signal,
            snr_grid_db: self.snr_grid_db.clone(),
            angle_mode: self.angle_mode.clone(),
            m_set: self.m_set.clone(),
            trials: self.trials,
            base_seed: self.seed,
            estimators: self.estimators.clone(),
            angle_grid: self.angle_grid.clone(),
            peak: PeakConfig {
                window_size: self.window_b,
                clamp_out_of_range: false,
            },
            range_policy: if self.strict_range {
                RangePolicy::Abort
            } else {
                RangePolicy::Exclude
            },
            dither: self.dither,
            noiseless: self.noiseless,
            units: self.units,
            execution,
        }
    }

    /// The resolved settings as TOML in the input format.
    pub fn echo_toml(&self) -> String {
        toml::to_string(&self.echo).expect("resolved configuration serialises")
    }
}

fn prefixed(section: &str, e: crate::Error) -> ConfigError {
    match e {
        crate::Error::Invalid { field, reason } => {
            ConfigError::validation(&format!("{section}.{field}"), reason)
        }
        other => ConfigError::validation(section, other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_reference_defaults() {
        let cfg = ResolvedConfig::resolve(RawConfig::from_toml("", "empty").unwrap()).unwrap();
        assert_eq!(cfg.array.carrier_freq, 3.75e9);
        assert_eq!(cfg.array.bandwidth, 20e6);
        assert_eq!(cfg.array.element_spacing, 0.04);
        assert_eq!(cfg.array.ttd_delay, 1.0 / 20e6);
        assert_eq!(cfg.m_set, vec![8, 16, 32]);
        assert_eq!(cfg.num_bins, 512);
        assert_eq!(
            cfg.snr_grid_db,
            vec![-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0]
        );
        assert_eq!(cfg.angle_grid.len(), 2401);
        assert_eq!(cfg.angle_mode, AngleMode::Fixed(0.0));
        assert_eq!(cfg.trials, 10_000);
    }

    #[test]
    fn frequency_suffixes() {
        assert_eq!(parse_frequency("3.75 GHz").unwrap(), 3.75e9);
        assert_eq!(parse_frequency("20MHz").unwrap(), 20e6);
        assert_eq!(parse_frequency("12.5kHz").unwrap(), 12.5e3);
        assert_eq!(parse_frequency("7 Hz").unwrap(), 7.0);
        assert_eq!(parse_frequency("2e7").unwrap(), 2e7);
        assert!(parse_frequency("fast").is_err());
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = RawConfig::from_toml("[array]\nnum_elemnts = 8\n", "cfg.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("num_elemnts"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn single_element_is_rejected() {
        let raw = RawConfig::from_toml("[array]\nm_set = [1]\n", "t").unwrap();
        match ResolvedConfig::resolve(raw) {
            Err(ConfigError::Validation { key, .. }) => assert_eq!(key, "array.num_elements"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_delay_with_peak_is_rejected() {
        let raw = RawConfig::from_toml("[array]\nttd_delay = 0.0\n", "t").unwrap();
        assert!(matches!(
            ResolvedConfig::resolve(raw),
            Err(ConfigError::Validation { .. })
        ));
        let raw = RawConfig::from_toml(
            "[array]\nttd_delay = 0.0\n[sweep]\nestimators = [\"ml\"]\n",
            "t",
        )
        .unwrap();
        assert!(ResolvedConfig::resolve(raw).is_ok());
    }

    #[test]
    fn overrides_and_echo_round_trip() {
        let base = RawConfig::from_toml(
            "[array]\nbandwidth = \"40 MHz\"\n[sweep]\ntrials = 5\n",
            "t",
        )
        .unwrap();
        let mut flags = RawConfig::default();
        flags.sweep.trials = Some(9);
        let cfg = ResolvedConfig::resolve(base.merge(flags)).unwrap();
        assert_eq!(cfg.trials, 9);
        assert_eq!(cfg.array.bandwidth, 40e6);
        assert_eq!(cfg.array.ttd_delay, 1.0 / 40e6);

        let again =
            ResolvedConfig::resolve(RawConfig::from_toml(&cfg.echo_toml(), "echo").unwrap())
                .unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn manifest_section_is_ignored() {
        let raw =
            RawConfig::from_toml("[manifest]\ntool = \"x\"\n[sweep]\nseed = 4\n", "t").unwrap();
        assert_eq!(ResolvedConfig::resolve(raw).unwrap().seed, 4);
    }
}
