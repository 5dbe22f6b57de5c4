//! CSV tables and run manifests.
//!
//! Every table starts with one `#` line naming its schema and the
//! conventions behind the numbers, followed by the header row. Fields are
//! `,`-separated, use `.` as the decimal point and write infinite bounds as
//! `inf`. Floats use Rust's shortest round-trip formatting, so reruns with the
//! same manifest are byte-identical.

use std::io::{self, Write};
use std::path::Path;

use crate::fisher::{BandwidthRow, KappaMoments};
use crate::montecarlo::{ErrorUnits, FisherCheck, SweepReport};

/// Conventions shared by every table.
pub const CONVENTIONS: &str = "snr=per-bin |X_n|^2/sigma_v^2 before array combining; \
bins=midpoints -B/2+(n+1/2)B/N; angles=degrees; gain=1 (compensated)";

fn fmt(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

fn preamble<W: Write>(w: &mut W, schema: &str, header: &[&str]) -> io::Result<()> {
    writeln!(w, "# ttd-aoa {schema}; {CONVENTIONS}")?;
    writeln!(w, "{}", header.join(","))
}

fn row<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

/// `kappa/v1`: one row per `(f, phi)` point, frequencies outer.
pub fn write_kappa_grid<W: Write>(
    w: &mut W,
    f_points: &[f64],
    phi_points: &[f64],
    values_db: &[Vec<f64>],
) -> io::Result<()> {
    preamble(w, "kappa/v1", &["f_hz", "phi_deg", "kappa_db"])?;
    for (&f, line) in f_points.iter().zip(values_db) {
        for (&phi, &v) in phi_points.iter().zip(line) {
            row(w, &[fmt(f), fmt(phi.to_degrees()), fmt(v)])?;
        }
    }
    Ok(())
}

/// `moments/v1`.
pub fn write_moments<W: Write>(w: &mut W, moments: &[KappaMoments]) -> io::Result<()> {
    preamble(w, "moments/v1", &["phi_deg", "kappa0", "kappa1", "kappa2"])?;
    for m in moments {
        row(
            w,
            &[
                fmt(m.phi.to_degrees()),
                fmt(m.kappa0),
                fmt(m.kappa1),
                fmt(m.kappa2),
            ],
        )?;
    }
    Ok(())
}

/// `bandwidth/v1`: angle-averaged moments over [-60, 60] degrees (121
/// points) with `tau_d = 1/B`; dB of magnitudes, sign of `kappa1` separate.
pub fn write_bandwidth<W: Write>(w: &mut W, rows: &[BandwidthRow]) -> io::Result<()> {
    preamble(
        w,
        "bandwidth/v1",
        &[
            "beta",
            "M",
            "kappa0_db",
            "kappa1_db",
            "kappa1_sign",
            "kappa2_db",
        ],
    )?;
    for r in rows {
        row(
            w,
            &[
                fmt(r.beta),
                r.num_elements.to_string(),
                fmt(r.kappa0_db()),
                fmt(r.kappa1_db()),
                r.kappa1_sign().to_string(),
                fmt(r.kappa2_db()),
            ],
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrbRow {
    pub snr_db: f64,
    pub num_elements: usize,
    pub phi: f64,
    /// Bound in rad^2.
    pub crb: f64,
}

/// `crb/v1`.
pub fn write_crb<W: Write>(w: &mut W, rows: &[CrbRow]) -> io::Result<()> {
    preamble(w, "crb/v1", &["snr_db", "M", "phi_deg", "crb_deg2"])?;
    let scale = ErrorUnits::Degrees.squared_scale();
    for r in rows {
        row(
            w,
            &[
                fmt(r.snr_db),
                r.num_elements.to_string(),
                fmt(r.phi.to_degrees()),
                fmt(r.crb * scale),
            ],
        )?;
    }
    Ok(())
}

/// `sweep/v1`.
pub fn write_sweep<W: Write>(w: &mut W, report: &SweepReport) -> io::Result<()> {
    let header: &[&str] = match report.units {
        ErrorUnits::Degrees => &[
            "snr_db",
            "M",
            "estimator",
            "trials_used",
            "trials_excluded",
            "mse_deg2",
            "rmse_deg",
            "crb_deg2",
        ],
        ErrorUnits::Radians => &[
            "snr_db",
            "M",
            "estimator",
            "trials_used",
            "trials_excluded",
            "mse_rad2",
            "rmse_rad",
            "crb_rad2",
        ],
    };
    let mode = report.rows.first().map_or("fixed_angle", |r| r.angle_mode);
    writeln!(w, "# ttd-aoa sweep/v1; angle_mode={mode}; {CONVENTIONS}")?;
    writeln!(w, "{}", header.join(","))?;
    for r in &report.rows {
        row(
            w,
            &[
                fmt(r.snr_db),
                r.num_elements.to_string(),
                r.estimator.to_string(),
                r.trials_used.to_string(),
                r.trials_excluded.to_string(),
                fmt(r.mse),
                fmt(r.rmse),
                fmt(r.crb),
            ],
        )?;
    }
    Ok(())
}

/// `fi_check/v1`.
pub fn write_fi_check<W: Write>(
    w: &mut W,
    phi: f64,
    snr_db: f64,
    check: &FisherCheck,
) -> io::Result<()> {
    preamble(
        w,
        "fi_check/v1",
        &[
            "phi_deg",
            "snr_db",
            "trials",
            "empirical_I",
            "analytic_I",
            "ratio",
        ],
    )?;
    row(
        w,
        &[
            fmt(phi.to_degrees()),
            fmt(snr_db),
            check.trials.to_string(),
            fmt(check.empirical),
            fmt(check.analytic),
            fmt(check.ratio()),
        ],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub phi: f64,
    pub snr_db: f64,
    pub num_elements: usize,
    pub seed: u64,
    pub estimator: String,
    pub phi_hat: f64,
    /// Residual for ML, selected bin frequency (Hz) for the peak method.
    pub diagnostic: f64,
}

/// `estimate/v1`.
pub fn write_estimates<W: Write>(w: &mut W, rows: &[EstimateRow]) -> io::Result<()> {
    preamble(
        w,
        "estimate/v1",
        &[
            "phi_deg",
            "snr_db",
            "M",
            "seed",
            "estimator",
            "phi_hat_deg",
            "sq_err_deg2",
            "diagnostic",
        ],
    )?;
    for r in rows {
        let err = (r.phi_hat - r.phi).to_degrees();
        row(
            w,
            &[
                fmt(r.phi.to_degrees()),
                fmt(r.snr_db),
                r.num_elements.to_string(),
                r.seed.to_string(),
                r.estimator.clone(),
                fmt(r.phi_hat.to_degrees()),
                fmt(err * err),
                fmt(r.diagnostic),
            ],
        )?;
    }
    Ok(())
}

/// Everything needed to rerun the command that produced a CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub csv: String,
    pub base_seed: u64,
    pub timestamp: String,
    /// Resolved configuration in the config-file format.
    pub config_toml: String,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        let mut head = toml::Table::new();
        head.insert("tool".into(), "ttd-aoa".into());
        head.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        head.insert("command".into(), self.command.clone().into());
        head.insert("csv".into(), self.csv.clone().into());
        head.insert("base_seed".into(), (self.base_seed as i64).into());
        head.insert("timestamp".into(), self.timestamp.clone().into());
        head.insert("conventions".into(), CONVENTIONS.into());
        let mut outer = toml::Table::new();
        outer.insert("manifest".into(), toml::Value::Table(head));
        format!(
            "{}\n{}",
            toml::to_string(&outer).expect("manifest serialises"),
            self.config_toml
        )
    }

    /// Writes `<csv>.manifest.toml` next to the table.
    pub fn write_beside(&self, csv_path: &Path) -> io::Result<std::path::PathBuf> {
        let mut name = csv_path.as_os_str().to_owned();
        name.push(".manifest.toml");
        let path = std::path::PathBuf::from(name);
        std::fs::write(&path, self.to_toml())?;
        Ok(path)
    }
}
