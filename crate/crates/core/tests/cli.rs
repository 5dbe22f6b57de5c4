use std::path::Path;
use std::process::{Command, Output};

fn ttd_aoa(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ttd-aoa"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn ttd-aoa")
}

fn data_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(2)
        .map(str::to_owned)
        .collect()
}

#[test]
fn kappa_single_point_prints_apex() {
    let dir = tempfile::tempdir().unwrap();
    let out = ttd_aoa(dir.path(), &["kappa", "--single", "--f", "0", "--phi", "0"]);
    assert!(out.status.success());
    let value: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((value - 28.94).abs() < 5e-3);
    assert!(dir.path().join("kappa.csv").exists());
    assert!(dir.path().join("kappa.csv.manifest.toml").exists());
}

#[test]
fn crb_has_one_row_per_snr_and_array() {
    let dir = tempfile::tempdir().unwrap();
    let out = ttd_aoa(
        dir.path(),
        &[
            "crb",
            "--snr-min",
            "-10",
            "--snr-max",
            "10",
            "--snr-step",
            "10",
            "--M",
            "8,16",
            "--out",
            "b.csv",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = data_lines(&dir.path().join("b.csv"));
    assert_eq!(rows.len(), 6);
    assert!(rows[0].starts_with("-10,8,0,"));
}

#[test]
fn crb_at_endfire_is_inf() {
    let dir = tempfile::tempdir().unwrap();
    let out = ttd_aoa(
        dir.path(),
        &[
            "crb",
            "--phi",
            "90",
            "--snr-min",
            "0",
            "--snr-max",
            "0",
            "--M",
            "8",
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        data_lines(&dir.path().join("crb.csv")),
        vec!["0,8,90,inf".to_string()]
    );
}

#[test]
fn invalid_inputs_exit_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["crb", "--M", "1"][..],
        &["estimate", "--tau-d", "0", "--estimators", "peak"],
        &["sweep", "--window-b", "4"],
        &["kappa", "--bandwidth", "fast"],
    ] {
        let out = ttd_aoa(dir.path(), args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn unknown_config_key_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[array]\nm_set = [8]\nbogus = 1\n").unwrap();
    let out = ttd_aoa(dir.path(), &["crb", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bogus") && err.contains("line 3"), "{err}");
}

#[test]
fn manifest_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sweep",
        "--trials",
        "40",
        "--M",
        "8",
        "--snr-min",
        "0",
        "--snr-max",
        "5",
        "--seed",
        "17",
    ];
    let first = ttd_aoa(dir.path(), &[&args[..], &["--out", "a.csv"]].concat());
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let replay = ttd_aoa(
        dir.path(),
        &["sweep", "--config", "a.csv.manifest.toml", "--out", "b.csv"],
    );
    assert!(
        replay.status.success(),
        "{}",
        String::from_utf8_lossy(&replay.stderr)
    );
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noiseless_estimate_is_exact_on_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = ttd_aoa(
        dir.path(),
        &[
            "estimate",
            "--phi",
            "12.5",
            "--noiseless",
            "--estimators",
            "ml",
        ],
    );
    assert!(out.status.success());
    let rows = data_lines(&dir.path().join("estimate.csv"));
    let fields: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(fields[4], "ml");
    assert_eq!(fields[5], "12.5");
    assert_eq!(fields[6], "0");
}
