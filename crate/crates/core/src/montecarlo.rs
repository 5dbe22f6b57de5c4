//! Reproducible Monte Carlo sweeps of the estimators against the bound.
//!
//! Every trial owns its random stream. The seed of a trial is a pure
//! function of its indices,
//!
//! ```text
//! h = splitmix64(base_seed)
//! h = splitmix64(h ^ snr_index)
//! h = splitmix64(h ^ angle_index)
//! h = splitmix64(h ^ M)
//! seed = splitmix64(h ^ trial_index)
//! ```
//!
//! and seeds a ChaCha8 generator: stream 0 draws the noise, stream 1 the
//! sub-grid angle dither. Any single trial can therefore be replayed in
//! isolation, and results do not depend on how trials are scheduled across
//! threads. Aggregation always runs in trial-index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::Rng;

use crate::array::{
    complex_gaussian_noise, generate_observation, noise_rng, noiseless_observation,
    signal_derivative, ArrayConfig, FrequencyGrid, SignalSpec,
};
use crate::error::{Error, Result};
use crate::estimators::{peak_estimate, AngleGrid, EstimatorKind, MlEstimator, PeakConfig};
use crate::fisher::{crb_simplified, fisher_information_exact};

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial; see the module documentation.
pub fn trial_seed(
    base_seed: u64,
    trial_index: u64,
    snr_index: u64,
    angle_index: u64,
    num_elements: u64,
) -> u64 {
    [snr_index, angle_index, num_elements, trial_index]
        .iter()
        .fold(splitmix64(base_seed), |h, &w| splitmix64(h ^ w))
}

/// Where trials are executed. Without the `parallel` feature both variants
/// run on the calling thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

fn map_indices<T, F>(count: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..count).into_par_iter().map(f).collect(),
        _ => (0..count).map(f).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AngleMode {
    /// Every trial uses the same nominal angle (radians).
    Fixed(f64),
    /// Trial `t` uses angle `t mod K` of the list (radians).
    Averaged(Vec<f64>),
}

impl AngleMode {
    pub fn label(&self) -> &'static str {
        match self {
            AngleMode::Fixed(_) => "fixed_angle",
            AngleMode::Averaged(_) => "averaged",
        }
    }

    pub fn angles(&self) -> &[f64] {
        match self {
            AngleMode::Fixed(phi) => std::slice::from_ref(phi),
            AngleMode::Averaged(list) => list,
        }
    }

    /// Steering angles of the evaluation range, -60 to 60 degrees in 10 degree steps.
    pub fn averaged_default() -> Self {
        AngleMode::Averaged((-6..=6).map(|k| (10.0 * k as f64).to_radians()).collect())
    }
}

/// Treatment of peak estimates whose arcsin argument leaves [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangePolicy {
    /// Saturate at +-90 degrees and keep the trial.
    Clamp,
    /// Count the trial as excluded and leave it out of the MSE.
    #[default]
    Exclude,
    /// Fail the sweep.
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorUnits {
    #[default]
    Degrees,
    Radians,
}

impl ErrorUnits {
    /// Multiplier turning rad^2 into the reporting unit.
    pub fn squared_scale(&self) -> f64 {
        match self {
            ErrorUnits::Degrees => (180.0 / std::f64::consts::PI).powi(2),
            ErrorUnits::Radians => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Array template; the element count is replaced by each entry of `m_set`.
    pub array: ArrayConfig,
    pub num_bins: usize,
    pub signal: SignalSpec,
    pub snr_grid_db: Vec<f64>,
    pub angle_mode: AngleMode,
    pub m_set: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub angle_grid: AngleGrid,
    pub peak: PeakConfig,
    pub range_policy: RangePolicy,
    /// Offset each trial's true angle uniformly within +-half a grid step,
    /// so the ML quantisation error is uniform over a grid cell.
    pub dither: bool,
    pub noiseless: bool,
    pub units: ErrorUnits,
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let array = ArrayConfig::default();
        SweepConfig {
            signal: SignalSpec::unit(array.bandwidth),
            array,
            num_bins: 512,
            snr_grid_db: (-4..=2).map(|k| 5.0 * k as f64).collect(),
            angle_mode: AngleMode::Fixed(0.0),
            m_set: vec![8, 16, 32],
            trials: 10_000,
            base_seed: 0,
            estimators: vec![EstimatorKind::Ml, EstimatorKind::Peak],
            angle_grid: AngleGrid::default(),
            peak: PeakConfig::default(),
            range_policy: RangePolicy::default(),
            dither: true,
            noiseless: false,
            units: ErrorUnits::default(),
            execution: Execution::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid(
                "trials",
                "at least one trial per cell is required",
            ));
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr_grid", "needs at least one finite SNR"));
        }
        if self.m_set.is_empty() {
            return Err(Error::invalid("m_set", "needs at least one element count"));
        }
        for &m in &self.m_set {
            self.array.with_elements(m).validate()?;
        }
        if self.estimators.is_empty() {
            return Err(Error::invalid("estimators", "needs at least one estimator"));
        }
        let angles = self.angle_mode.angles();
        if angles.is_empty()
            || angles
                .iter()
                .any(|a| a.is_nan() || a.abs() >= std::f64::consts::FRAC_PI_2)
        {
            return Err(Error::invalid(
                "angles",
                "true angles must be non-empty and inside (-90, 90) degrees",
            ));
        }
        if self.estimators.contains(&EstimatorKind::Peak) {
            self.peak.validate(self.num_bins)?;
            if self.array.ttd_delay <= 0.0 {
                return Err(Error::invalid(
                    "ttd_delay",
                    "the peak estimator needs tau_d > 0 (the angle map is degenerate at 0)",
                ));
            }
        }
        FrequencyGrid::for_array(self.num_bins, &self.array)?;
        Ok(())
    }
}

/// Indices and values identifying one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialKey {
    pub trial_index: u64,
    pub snr_index: u64,
    pub snr_db: f64,
    pub angle_index: u64,
    /// Nominal true angle, radians.
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    /// Angle the snapshot was generated at (nominal plus dither), radians.
    pub true_phi: f64,
    pub num_elements: usize,
    pub estimator: EstimatorKind,
    pub phi_hat: f64,
    /// `(phi_hat - true_phi)^2` in the sweep's reporting unit.
    pub squared_error: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Used(TrialRecord),
    Excluded {
        estimator: EstimatorKind,
        seed: u64,
        error: Error,
    },
}

/// Everything needed to run trials for one element count.
pub struct TrialRunner {
    cfg: ArrayConfig,
    fgrid: FrequencyGrid,
    signal: SignalSpec,
    ml: Option<MlEstimator>,
    peak: PeakConfig,
    range_policy: RangePolicy,
    dither_halfwidth: f64,
    noiseless: bool,
    base_seed: u64,
    squared_scale: f64,
}

impl TrialRunner {
    pub fn new(sweep: &SweepConfig, num_elements: usize) -> Result<Self> {
        let cfg = sweep.array.with_elements(num_elements);
        cfg.validate()?;
        let fgrid = FrequencyGrid::for_array(sweep.num_bins, &cfg)?;
        let ml = if sweep.estimators.contains(&EstimatorKind::Ml) {
            Some(MlEstimator::new(
                &sweep.angle_grid,
                &fgrid,
                &sweep.signal,
                &cfg,
            )?)
        } else {
            None
        };
        let peak = PeakConfig {
            clamp_out_of_range: sweep.range_policy == RangePolicy::Clamp,
            ..sweep.peak
        };
        Ok(TrialRunner {
            cfg,
            fgrid,
            signal: sweep.signal,
            ml,
            peak,
            range_policy: sweep.range_policy,
            dither_halfwidth: if sweep.dither {
                0.5 * sweep.angle_grid.resolution()
            } else {
                0.0
            },
            noiseless: sweep.noiseless,
            base_seed: sweep.base_seed,
            squared_scale: sweep.units.squared_scale(),
        })
    }

    pub fn array(&self) -> &ArrayConfig {
        &self.cfg
    }

    pub fn seed_for(&self, key: &TrialKey) -> u64 {
        trial_seed(
            self.base_seed,
            key.trial_index,
            key.snr_index,
            key.angle_index,
            self.cfg.num_elements as u64,
        )
    }

    /// Generates one snapshot and runs each requested estimator on it.
    pub fn run_trial(
        &self,
        key: &TrialKey,
        estimators: &[EstimatorKind],
    ) -> Result<Vec<TrialOutcome>> {
        let seed = self.seed_for(key);
        let true_phi = if self.dither_halfwidth > 0.0 {
            let mut rng = noise_rng(seed);
            rng.set_stream(1);
            key.phi + rng.random_range(-self.dither_halfwidth..self.dither_halfwidth)
        } else {
            key.phi
        };
        let obs = if self.noiseless {
            noiseless_observation(true_phi, key.snr_db, &self.fgrid, &self.signal, &self.cfg)?
        } else {
            generate_observation(
                true_phi,
                key.snr_db,
                seed,
                &self.fgrid,
                &self.signal,
                &self.cfg,
            )?
        };
        estimators
            .iter()
            .map(|&kind| {
                let estimate = match kind {
                    EstimatorKind::Ml => self
                        .ml
                        .as_ref()
                        .ok_or_else(|| Error::invalid("estimators", "ML dictionary was not built"))?
                        .estimate(&obs),
                    EstimatorKind::Peak => peak_estimate(&obs, &self.peak, &self.fgrid, &self.cfg),
                };
                match estimate {
                    Ok(r) => {
                        let err = r.phi_hat - true_phi;
                        Ok(TrialOutcome::Used(TrialRecord {
                            snr_db: key.snr_db,
                            true_phi,
                            num_elements: self.cfg.num_elements,
                            estimator: kind,
                            phi_hat: r.phi_hat,
                            squared_error: err * err * self.squared_scale,
                            seed,
                        }))
                    }
                    Err(e @ Error::Range { .. }) if self.range_policy == RangePolicy::Exclude => {
                        Ok(TrialOutcome::Excluded {
                            estimator: kind,
                            seed,
                            error: e,
                        })
                    }
                    Err(e) => Err(e),
                }
            })
            .collect()
    }
}

/// One aggregated `(SNR, M, estimator)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub num_elements: usize,
    pub estimator: EstimatorKind,
    pub trials_used: usize,
    pub trials_excluded: usize,
    /// Mean squared error in the report unit; NaN when every trial was excluded.
    pub mse: f64,
    pub rmse: f64,
    /// Narrowband bound in the report unit, averaged over the trial angles in
    /// `averaged` mode.
    pub crb: f64,
    pub angle_mode: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Ordered by SNR, then element count, then estimator as configured.
    pub rows: Vec<SweepRow>,
    pub units: ErrorUnits,
}

impl SweepReport {
    pub fn row(
        &self,
        snr_db: f64,
        num_elements: usize,
        estimator: EstimatorKind,
    ) -> Option<&SweepRow> {
        self.rows.iter().find(|r| {
            r.snr_db == snr_db && r.num_elements == num_elements && r.estimator == estimator
        })
    }
}

/// Runs every `(SNR, M, estimator)` cell of the sweep.
pub fn run_sweep(sweep: &SweepConfig) -> Result<SweepReport> {
    sweep.validate()?;
    let angles = sweep.angle_mode.angles();
    let scale = sweep.units.squared_scale();
    // cells[snr][m][estimator]
    let mut cells: Vec<Vec<Vec<SweepRow>>> = vec![Vec::new(); sweep.snr_grid_db.len()];

    for &m in &sweep.m_set {
        let runner = TrialRunner::new(sweep, m)?;
        for (si, &snr_db) in sweep.snr_grid_db.iter().enumerate() {
            let outcomes = map_indices(sweep.trials, sweep.execution, |t| {
                let angle_index = t % angles.len();
                let key = TrialKey {
                    trial_index: t as u64,
                    snr_index: si as u64,
                    snr_db,
                    angle_index: angle_index as u64,
                    phi: angles[angle_index],
                };
                runner.run_trial(&key, &sweep.estimators)
            });
            let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

            let noise_variance = sweep.signal.noise_variance(snr_db);
            let mut crb = 0.0;
            for (k, &phi) in angles.iter().enumerate() {
                let uses = (sweep.trials + angles.len() - 1 - k) / angles.len();
                crb += uses as f64
                    * crb_simplified(
                        phi,
                        &sweep.signal,
                        runner.array(),
                        noise_variance,
                        sweep.num_bins,
                    )?;
            }
            let crb = crb / sweep.trials as f64 * scale;

            let rows = sweep
                .estimators
                .iter()
                .enumerate()
                .map(|(ei, &kind)| {
                    let (mut sum, mut used, mut excluded) = (0.0, 0usize, 0usize);
                    for trial in &outcomes {
                        match &trial[ei] {
                            TrialOutcome::Used(rec) => {
                                sum += rec.squared_error;
                                used += 1;
                            }
                            TrialOutcome::Excluded { .. } => excluded += 1,
                        }
                    }
                    let mse = if used > 0 {
                        sum / used as f64
                    } else {
                        f64::NAN
                    };
                    SweepRow {
                        snr_db,
                        num_elements: m,
                        estimator: kind,
                        trials_used: used,
                        trials_excluded: excluded,
                        mse,
                        rmse: mse.sqrt(),
                        crb,
                        angle_mode: sweep.angle_mode.label(),
                    }
                })
                .collect();
            cells[si].push(rows);
        }
    }

    Ok(SweepReport {
        rows: cells.into_iter().flatten().flatten().collect(),
        units: sweep.units,
    })
}

/// Empirical versus analytic Fisher information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherCheck {
    pub trials: usize,
    /// Sample variance of the score at the true angle.
    pub empirical: f64,
    pub analytic: f64,
    pub score_mean: f64,
    /// Standard error of `score_mean`.
    pub score_std_error: f64,
}

impl FisherCheck {
    pub fn ratio(&self) -> f64 {
        self.empirical / self.analytic
    }
}

/// Draws `trials` noisy snapshots at `phi` and compares the variance of the
/// score `dL/dphi = (2/sigma^2) sum_n Re{ conj(dY_n/dphi) (Z_n - Y_n) }`
/// with [`fisher_information_exact`].
#[allow(clippy::too_many_arguments)]
pub fn empirical_fisher_check(
    phi: f64,
    snr_db: f64,
    trials: usize,
    base_seed: u64,
    fgrid: &FrequencyGrid,
    sig: &SignalSpec,
    cfg: &ArrayConfig,
    execution: Execution,
) -> Result<FisherCheck> {
    if trials < 2 {
        return Err(Error::invalid(
            "trials",
            "the score variance needs at least 2 draws",
        ));
    }
    if !snr_db.is_finite() {
        return Err(Error::invalid("snr_db", format!("{snr_db} is not finite")));
    }
    fgrid.check_against(cfg)?;
    let variance = sig.noise_variance(snr_db);
    let analytic = fisher_information_exact(phi, fgrid, sig, cfg, variance)?.fisher_info;
    let derivative = signal_derivative(phi, fgrid, sig, cfg);
    let m = cfg.num_elements as u64;

    let scores = map_indices(trials, execution, |t| {
        let mut rng = noise_rng(trial_seed(base_seed, t as u64, 0, 0, m));
        let noise = complex_gaussian_noise(&mut rng, fgrid.len(), variance);
        let s: f64 = derivative
            .iter()
            .zip(&noise)
            .map(|(dy, v)| (dy.conj() * v).re)
            .sum();
        2.0 * s / variance
    });

    let n = trials as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(FisherCheck {
        trials,
        empirical: var,
        analytic,
        score_mean: mean,
        score_std_error: (var / n).sqrt(),
    })
}
