use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ttd_aoa::array::{generate_observation, noiseless_observation, FrequencyGrid};
use ttd_aoa::config::{parse_frequency, ConfigError, Delay, Frequency, RawConfig, ResolvedConfig};
use ttd_aoa::estimators::{peak_estimate, Diagnostic, MlEstimator, PeakConfig};
use ttd_aoa::fisher::{
    fisher_information_exact, fisher_information_simplified, kappa, kappa_bandwidth_sweep,
    kappa_grid, kappa_moments, to_db,
};
use ttd_aoa::montecarlo::{empirical_fisher_check, run_sweep, Execution};
use ttd_aoa::report::{self, CrbRow, EstimateRow, RunManifest};
use ttd_aoa::EstimatorKind;

const EXIT_RUNTIME: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

#[derive(Parser)]
#[command(
    name = "ttd-aoa",
    version,
    about = "Angle-of-arrival bounds and estimators for true-time-delay arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// kappa maps, kappa moments over angle, or the bandwidth sweep
    Kappa(KappaArgs),
    /// Cramér-Rao bound over the SNR grid and element counts
    Crb(CrbArgs),
    /// Monte Carlo MSE of the estimators next to the bound
    Sweep,
    /// One noisy snapshot through the estimators
    Estimate,
    /// Sample variance of the score versus the analytic Fisher information
    CheckFi,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file (a manifest from an earlier run also works)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV; a manifest is written next to it
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Element counts, comma separated; single-array commands use the first
    #[arg(long = "M", global = true, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    snr_min: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    snr_max: Option<f64>,
    #[arg(long, global = true)]
    snr_step: Option<f64>,
    /// SNR of single-snapshot commands (estimate, check-fi), dB
    #[arg(long, global = true, allow_negative_numbers = true)]
    snr: Option<f64>,
    /// True angle, degrees
    #[arg(long, global = true, allow_negative_numbers = true)]
    phi: Option<f64>,
    #[arg(long, global = true, value_enum)]
    angle_mode: Option<AngleModeArg>,
    #[arg(long, global = true)]
    grid_res_deg: Option<f64>,
    #[arg(long, global = true)]
    window_b: Option<usize>,
    /// Fail on out-of-range peak estimates instead of excluding or clamping them
    #[arg(long, global = true)]
    strict_range: bool,
    /// Skip the noise draw
    #[arg(long, global = true)]
    noiseless: bool,
    /// Keep true angles on their nominal values instead of dithering within a grid cell
    #[arg(long, global = true)]
    no_dither: bool,
    /// Estimators, comma separated (ml, peak)
    #[arg(long, global = true, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Carrier frequency, e.g. 3.75GHz
    #[arg(long, global = true)]
    fc: Option<String>,
    /// Bandwidth, e.g. 20MHz
    #[arg(long, global = true)]
    bandwidth: Option<String>,
    /// Element spacing, metres
    #[arg(long, global = true)]
    spacing: Option<f64>,
    /// True-time delay per element, seconds (default 1/B)
    #[arg(long, global = true)]
    tau_d: Option<f64>,
    /// Number of frequency bins N
    #[arg(long, global = true)]
    bins: Option<usize>,
    /// Report squared errors in rad^2 instead of deg^2
    #[arg(long, global = true)]
    radians: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AngleModeArg {
    Fixed,
    Averaged,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum KappaWhat {
    #[default]
    Grid,
    Moments,
    Bandwidth,
}

#[derive(Args)]
struct KappaArgs {
    #[arg(long, value_enum, default_value_t)]
    what: KappaWhat,
    /// Evaluate a single (f, phi) point
    #[arg(long)]
    single: bool,
    /// Frequency of the single point, e.g. 2.5MHz
    #[arg(long, default_value = "0", allow_negative_numbers = true)]
    f: String,
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum CrbForm {
    #[default]
    Simplified,
    Exact,
}

#[derive(Args)]
struct CrbArgs {
    #[arg(long, value_enum, default_value_t)]
    form: CrbForm,
}

enum Failure {
    Validation(String),
    Runtime(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io { .. } => Failure::Runtime(e.into()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

impl From<ttd_aoa::Error> for Failure {
    fn from(e: ttd_aoa::Error) -> Self {
        match e {
            ttd_aoa::Error::Invalid { .. } | ttd_aoa::Error::Degenerate(_) => {
                Failure::Validation(e.to_string())
            }
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn overrides(c: &Common) -> Result<RawConfig, Failure> {
    let mut raw = RawConfig::default();
    let freq = |key: &str, v: &Option<String>| -> Result<Option<Frequency>, Failure> {
        v.as_deref()
            .map(|s| {
                parse_frequency(s)
                    .map(Frequency::Hz)
                    .map_err(|e| Failure::Validation(format!("invalid value for `--{key}`: {e}")))
            })
            .transpose()
    };
    raw.array.m_set = c.m.clone();
    raw.array.carrier_freq = freq("fc", &c.fc)?;
    raw.array.bandwidth = freq("bandwidth", &c.bandwidth)?;
    raw.array.element_spacing = c.spacing;
    raw.array.ttd_delay = c.tau_d.map(Delay::Seconds);
    raw.array.num_bins = c.bins;
    raw.sweep.snr_min = c.snr_min;
    raw.sweep.snr_max = c.snr_max;
    raw.sweep.snr_step = c.snr_step;
    raw.sweep.trials = c.trials;
    raw.sweep.seed = c.seed;
    raw.sweep.phi_deg = c.phi;
    raw.sweep.angle_mode = c.angle_mode.map(|m| {
        match m {
            AngleModeArg::Fixed => "fixed",
            AngleModeArg::Averaged => "averaged",
        }
        .to_string()
    });
    raw.sweep.estimators = c.estimators.clone();
    raw.sweep.strict_range = c.strict_range.then_some(true);
    raw.sweep.noiseless = c.noiseless.then_some(true);
    raw.sweep.dither = c.no_dither.then_some(false);
    raw.sweep.units = c.radians.then(|| "rad".to_string());
    raw.estimators.grid_res_deg = c.grid_res_deg;
    raw.estimators.window_b = c.window_b;
    Ok(raw)
}

fn open_out(path: &Path) -> Result<BufWriter<File>, Failure> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn finish(
    command: &str,
    out: &Path,
    cfg: &ResolvedConfig,
    writer: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
) -> Result<(), Failure> {
    let mut w = open_out(out)?;
    writer(&mut w).with_context(|| format!("cannot write {}", out.display()))?;
    w.flush()?;
    let manifest = RunManifest {
        command: command.to_string(),
        csv: out.display().to_string(),
        base_seed: cfg.seed,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        config_toml: cfg.echo_toml(),
    };
    let path = manifest.write_beside(out)?;
    eprintln!("wrote {} and {}", out.display(), path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = match &cli.common.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    let cfg = ResolvedConfig::resolve(file.merge(overrides(&cli.common)?))?;
    let execution = Execution::Parallel;
    let snr = cli.common.snr.unwrap_or(0.0);
    if !snr.is_finite() {
        return Err(Failure::Validation(
            "invalid value for `--snr`: not finite".into(),
        ));
    }
    let default_out = |name: &str| PathBuf::from(format!("{name}.csv"));

    match &cli.command {
        Command::Kappa(args) => {
            let array = &cfg.array;
            match (args.single, args.what) {
                (true, _) => {
                    let f = parse_frequency(&args.f).map_err(|e| {
                        Failure::Validation(format!("invalid value for `--f`: {e}"))
                    })?;
                    let value = to_db(kappa(f, cfg.phi, array), cfg.floor_db);
                    println!("{value}");
                    let out = cli
                        .common
                        .out
                        .clone()
                        .unwrap_or_else(|| default_out("kappa"));
                    finish("kappa --single", &out, &cfg, |w| {
                        report::write_kappa_grid(w, &[f], &[cfg.phi], &[vec![value]])
                    })
                }
                (false, KappaWhat::Grid) => {
                    let n = cfg.freq_points;
                    let f: Vec<f64> = if n == 1 {
                        vec![0.0]
                    } else {
                        (0..n)
                            .map(|i| {
                                -0.5 * array.bandwidth + array.bandwidth * i as f64 / (n - 1) as f64
                            })
                            .collect()
                    };
                    let values = kappa_grid(&f, &cfg.kappa_angles, array, cfg.floor_db)?;
                    let out = cli
                        .common
                        .out
                        .clone()
                        .unwrap_or_else(|| default_out("kappa"));
                    finish("kappa", &out, &cfg, |w| {
                        report::write_kappa_grid(w, &f, &cfg.kappa_angles, &values)
                    })
                }
                (false, KappaWhat::Moments) => {
                    let moments = cfg
                        .kappa_angles
                        .iter()
                        .map(|&phi| kappa_moments(phi, array, cfg.quadrature))
                        .collect::<Result<Vec<_>, _>>()?;
                    let out = cli
                        .common
                        .out
                        .clone()
                        .unwrap_or_else(|| default_out("moments"));
                    finish("kappa --what moments", &out, &cfg, |w| {
                        report::write_moments(w, &moments)
                    })
                }
                (false, KappaWhat::Bandwidth) => {
                    let rows = with_threads(cli.common.threads, || {
                        kappa_bandwidth_sweep(&cfg.betas, &cfg.m_set, array, cfg.quadrature)
                    })??;
                    let out = cli
                        .common
                        .out
                        .clone()
                        .unwrap_or_else(|| default_out("bandwidth"));
                    finish("kappa --what bandwidth", &out, &cfg, |w| {
                        report::write_bandwidth(w, &rows)
                    })
                }
            }
        }
        Command::Crb(args) => {
            let mut rows = Vec::new();
            for &snr_db in &cfg.snr_grid_db {
                for &m in &cfg.m_set {
                    let array = cfg.array.with_elements(m);
                    let var = cfg.signal.noise_variance(snr_db);
                    let crb = match args.form {
                        CrbForm::Simplified => {
                            fisher_information_simplified(
                                cfg.phi,
                                &cfg.signal,
                                &array,
                                var,
                                cfg.num_bins,
                                cfg.quadrature,
                            )?
                            .crb
                        }
                        CrbForm::Exact => {
                            let grid = FrequencyGrid::for_array(cfg.num_bins, &array)?;
                            fisher_information_exact(cfg.phi, &grid, &cfg.signal, &array, var)?.crb
                        }
                    };
                    rows.push(CrbRow {
                        snr_db,
                        num_elements: m,
                        phi: cfg.phi,
                        crb,
                    });
                }
            }
            let out = cli.common.out.clone().unwrap_or_else(|| default_out("crb"));
            finish("crb", &out, &cfg, |w| report::write_crb(w, &rows))
        }
        Command::Sweep => {
            let sweep = cfg.sweep_config(execution);
            let report = with_threads(cli.common.threads, || run_sweep(&sweep))??;
            let out = cli
                .common
                .out
                .clone()
                .unwrap_or_else(|| default_out("sweep"));
            finish("sweep", &out, &cfg, |w| report::write_sweep(w, &report))
        }
        Command::Estimate => {
            let array = &cfg.array;
            let grid = FrequencyGrid::for_array(cfg.num_bins, array)?;
            let obs = if cfg.noiseless {
                noiseless_observation(cfg.phi, snr, &grid, &cfg.signal, array)?
            } else {
                generate_observation(cfg.phi, snr, cfg.seed, &grid, &cfg.signal, array)?
            };
            let mut rows = Vec::new();
            for &kind in &cfg.estimators {
                let result = match kind {
                    EstimatorKind::Ml => {
                        MlEstimator::new(&cfg.angle_grid, &grid, &cfg.signal, array)?
                            .estimate(&obs)?
                    }
                    EstimatorKind::Peak => {
                        let pcfg = PeakConfig {
                            window_size: cfg.window_b,
                            clamp_out_of_range: !cfg.strict_range,
                        };
                        peak_estimate(&obs, &pcfg, &grid, array)?
                    }
                };
                let diagnostic = match result.diagnostic {
                    Diagnostic::Ml { residual, .. } => residual,
                    Diagnostic::Peak { freq_hz, .. } => freq_hz,
                };
                println!("{kind}: {:.4} deg", result.phi_hat.to_degrees());
                rows.push(EstimateRow {
                    phi: cfg.phi,
                    snr_db: snr,
                    num_elements: array.num_elements,
                    seed: cfg.seed,
                    estimator: kind.to_string(),
                    phi_hat: result.phi_hat,
                    diagnostic,
                });
            }
            let out = cli
                .common
                .out
                .clone()
                .unwrap_or_else(|| default_out("estimate"));
            finish("estimate", &out, &cfg, |w| {
                report::write_estimates(w, &rows)
            })
        }
        Command::CheckFi => {
            let array = &cfg.array;
            let grid = FrequencyGrid::for_array(cfg.num_bins, array)?;
            let check = with_threads(cli.common.threads, || {
                empirical_fisher_check(
                    cfg.phi,
                    snr,
                    cfg.trials,
                    cfg.seed,
                    &grid,
                    &cfg.signal,
                    array,
                    execution,
                )
            })??;
            println!(
                "empirical {:.6e}  analytic {:.6e}  ratio {:.4}",
                check.empirical,
                check.analytic,
                check.ratio()
            );
            let out = cli
                .common
                .out
                .clone()
                .unwrap_or_else(|| default_out("fi_check"));
            finish("check-fi", &out, &cfg, |w| {
                report::write_fi_check(w, cfg.phi, snr, &check)
            })
        }
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match threads {
        Some(0) => Err(Failure::Validation(
            "invalid value for `--threads`: must be positive".into(),
        )),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Failure::Runtime(e.into())),
        None => Ok(f()),
    }
}

// Built without rayon everything already runs on the calling thread.
#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, Failure> {
    match threads {
        Some(0) => Err(Failure::Validation(
            "invalid value for `--threads`: must be positive".into(),
        )),
        _ => Ok(f()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
