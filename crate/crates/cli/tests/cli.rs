//! End-to-end checks of the command-line contract: output shapes, exit
//! codes, and the error envelope. Numerical depth lives in the library
//! tests and the acceptance gate; here we pin the interface.

use std::path::PathBuf;
use std::process::{Command, Output};

fn config_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_str()
        .unwrap()
        .to_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosegas"))
        .args(args)
        .output()
        .expect("spawning the CLI")
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json_of(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout_of(args)).expect("stdout parses as JSON")
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|line| !line.starts_with('#'))
        .map(|line| line.split(',').map(str::to_owned).collect())
        .collect()
}

fn object_keys(value: &serde_json::Value) -> Vec<&str> {
    value.as_object().expect("JSON object").keys().map(String::as_str).collect()
}

#[test]
fn scattering_reports_the_cubic_gamma() {
    let out = json_of(&["scattering", "--config", &config_path("cubic.json")]);
    assert_eq!(
        object_keys(&out),
        ["a", "gamma", "manifest", "phi0", "rel_error_estimate", "w0"]
    );
    let gamma = out["gamma"].as_f64().unwrap();
    assert!((gamma - 0.126365504929331).abs() < 1e-9, "gamma = {gamma}");
    let phi0 = out["phi0"].as_f64().unwrap();
    let w0 = out["w0"].as_f64().unwrap();
    assert!((phi0 + w0 - 1.0).abs() < 1e-12);
    let manifest = &out["manifest"];
    assert_eq!(manifest["subcommand"], "scattering");
    assert!(manifest["wall_time_ms"].is_u64());
}

#[test]
fn spectra_csv_reports_the_unit_gap() {
    let text = stdout_of(&[
        "spectra",
        "--config",
        &config_path("cubic.json"),
        "--kind",
        "neumann_special",
        "--l-list",
        "2",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["l", "kind", "gap", "trace_inv", "min_nonzero"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][0], "2");
    assert_eq!(rows[1][1], "neumann_special");
    let gap: f64 = rows[1][2].parse().unwrap();
    assert!((gap - 1.0).abs() < 1e-12, "gap = {gap}");
    assert!(text.lines().any(|l| l.starts_with("# params:")), "manifest comments missing");
}

#[test]
fn ed_csv_has_one_row_per_box() {
    let text = stdout_of(&[
        "ed",
        "--config",
        &config_path("cubic.json"),
        "--n",
        "2",
        "--l",
        "2",
        "--u",
        "1.0",
        "--bc",
        "neumann",
        "--sweep-l",
        "2,4",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["n", "l", "u", "bc", "dim", "e0", "residual"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][1], "2");
    assert_eq!(rows[2][1], "4");
    assert_eq!(rows[1][4], "378");
    let e0_small: f64 = rows[1][5].parse().unwrap();
    let e0_large: f64 = rows[2][5].parse().unwrap();
    assert!(e0_large < e0_small, "larger box should relax the ground energy");
}

#[test]
fn upper_bound_csv_carries_a_summary_line() {
    let text = stdout_of(&[
        "upper-bound",
        "--config",
        &config_path("cubic.json"),
        "--rho-min",
        "1e-3",
        "--rho-max",
        "1e-2",
        "--points",
        "3",
    ]);
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["rho", "e_psi", "ratio", "leading_term"]);
    assert_eq!(rows.len(), 4);
    for row in &rows[1..] {
        let ratio: f64 = row[2].parse().unwrap();
        assert!(ratio >= 1.0, "ratio = {ratio}");
    }
    let summary_line = text
        .lines()
        .find(|l| l.starts_with("# summary: "))
        .expect("summary trailer");
    let summary: serde_json::Value =
        serde_json::from_str(summary_line.trim_start_matches("# summary: ")).unwrap();
    assert!(summary["fit_exponent"].is_f64());
    assert!(summary["fit_prefactor"].is_f64());
}

#[test]
fn certify_reports_window_and_bound() {
    let out = json_of(&[
        "certify",
        "--config",
        &config_path("cubic.json"),
        "--n",
        "2",
        "--l",
        "4",
        "--u",
        "0.1",
        "--ed",
    ]);
    assert_eq!(
        object_keys(&out),
        ["S", "ed_energy", "lb_energy", "manifest", "mu_used", "mu_window", "slack"]
    );
    let lb = out["lb_energy"].as_f64().unwrap();
    let ed = out["ed_energy"].as_f64().unwrap();
    let slack = out["slack"].as_f64().unwrap();
    assert!(slack >= 0.0, "slack = {slack}");
    assert!((ed - lb - slack).abs() < 1e-15);
    let window = out["mu_window"].as_array().unwrap();
    let mu = out["mu_used"].as_f64().unwrap();
    assert!(window[0].as_f64().unwrap() < mu && mu < window[1].as_f64().unwrap());
}

#[test]
fn missing_config_is_a_validation_error() {
    let out = run(&["scattering", "--config", "/no/such/file.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "error envelope must be one line");
    let err: serde_json::Value = serde_json::from_str(&stderr).unwrap();
    assert_eq!(err["error"], "ValidationError");
    assert!(err["message"].as_str().unwrap().contains("file.json"));
}

#[test]
fn odd_box_size_is_a_validation_error() {
    let out = run(&[
        "ed",
        "--config",
        &config_path("cubic.json"),
        "--n",
        "2",
        "--l",
        "3",
        "--u",
        "1.0",
        "--bc",
        "neumann",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stderr).unwrap()).unwrap();
    assert_eq!(err["error"], "ValidationError");
}

#[test]
fn negative_interaction_is_a_validation_error() {
    let out = run(&[
        "certify",
        "--config",
        &config_path("cubic.json"),
        "--n",
        "2",
        "--l",
        "4",
        "--u",
        "-0.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["scattering", "--no-such-flag"][..],
        &["no-such-subcommand"][..],
        &["ed", "--config", "x.json", "--n", "2", "--l", "2", "--u", "1.0", "--bc", "moebius"][..],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(64), "for {args:?}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["--version"][..], &["spectra", "--help"][..]] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(0), "for {args:?}");
        assert!(!out.stdout.is_empty());
    }
    let help = stdout_of(&["spectra", "--help"]);
    for column in ["gap", "trace_inv", "min_nonzero"] {
        assert!(help.contains(column), "--help must document the {column} column");
    }
}

#[test]
fn out_flag_writes_the_file_and_keeps_stdout_quiet() {
    let dir = std::env::temp_dir().join(format!("bosegas-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("spectra.csv");
    let out = run(&[
        "spectra",
        "--config",
        &config_path("cubic.json"),
        "--kind",
        "periodic",
        "--l-list",
        "2,4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 3);
    assert!(text.ends_with('\n'));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_all_populates_the_output_directory() {
    let dir = std::env::temp_dir().join(format!("bosegas-sweep-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let out = run(&[
        "sweep-all",
        "--config",
        &config_path("cubic.json"),
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "sweep-all failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in [
        "scattering.json",
        "spectra.csv",
        "upper_bound.csv",
        "upper_bound.json",
        "ed.csv",
        "certify.json",
        "manifest.json",
    ] {
        let path = dir.join(name);
        assert!(path.is_file(), "missing {name}");
        assert!(std::fs::metadata(&path).unwrap().len() > 0, "{name} is empty");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "sweep-all");
    assert!(manifest["outputs"].as_array().unwrap().len() >= 6);
    std::fs::remove_dir_all(&dir).unwrap();
}
