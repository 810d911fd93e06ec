//! Black-box tests of the `blowup` binary: exit-code contract, file
//! outputs, fault-injection hooks.

use std::path::Path;
use std::process::Command;

fn blowup() -> Command {
    Command::new(env!("CARGO_BIN_EXE_blowup"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const FAST: &str = r#"
[grid]
points = 64

[surface]
family = "cosine_well"
lambda = 0.02

[integrator]
dtau_max = 5e-3
checkpoint_dtau = 1e-2

[verifier]
points = 128
t_max = 11.8

[sweep]
lambdas = [0.0, 0.25]
thetas = [0.0, 1e-5]
"#;

#[test]
fn print_defaults_is_parseable_toml() {
    let out = blowup().arg("--print-defaults").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: toml::Value = toml::from_str(&text).unwrap();
    assert!(parsed.get("grid").is_some());
    assert!(parsed.get("integrator").is_some());
}

#[test]
fn expand_writes_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(&cfgp, FAST);
    let out = blowup()
        .args(["expand", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/residual_report.csv")).unwrap();
    assert!(csv.starts_with("T,residual_sup,fitted_p"));
    assert!(dir.path().join("o/coeff_u41.txt").exists());
    assert!(dir.path().join("o/run.json").exists(), "provenance header");
}

#[test]
fn inadmissible_surface_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(&cfgp, "[surface]\nfamily = \"cosine_well\"\nlambda = 2.0\n");
    let out = blowup()
        .args(["expand", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("assumption"), "stderr: {err}");
}

#[test]
fn missing_family_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(&cfgp, "[surface]\nfamily = \"nonexistent\"\n");
    let out = blowup()
        .args(["construct", "--config"])
        .arg(&cfgp)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cfl_misconfiguration_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(
        &cfgp,
        &format!("{FAST}\n[verifier.extra]\n"),
    );
    // overwrite with a CFL violation
    write(
        &cfgp,
        r#"
[grid]
points = 64

[surface]
family = "zero"

[integrator]
dtau_max = 5e-3
checkpoint_dtau = 1e-2

[verifier]
points = 128
cfl = 1.3
t_max = 2.0
"#,
    );
    let out = blowup()
        .args(["verify", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn construct_zero_config_passes_budget() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(
        &cfgp,
        r#"
[grid]
points = 64

[surface]
family = "zero"

[integrator]
dtau_max = 5e-3
checkpoint_dtau = 1e-2
"#,
    );
    let out = blowup()
        .args(["construct", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let budget = std::fs::read_to_string(dir.path().join("o/budget.csv")).unwrap();
    let row = budget.lines().nth(1).unwrap();
    assert!(row.ends_with("true"), "budget row: {row}");
    assert!(dir.path().join("o/cauchy_record.json").exists());
}

#[test]
fn overlarge_lambda_reports_fail_without_error_exit() {
    // budget failure is a report, not an error: exit stays 0
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(
        &cfgp,
        r#"
[grid]
points = 128

[surface]
family = "cosine_well"
lambda = 0.01

[integrator]
dtau_max = 5e-3
checkpoint_dtau = 1e-2
"#,
    );
    let out = blowup()
        .args(["construct", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let budget = std::fs::read_to_string(dir.path().join("o/budget.csv")).unwrap();
    let row = budget.lines().nth(1).unwrap();
    assert!(row.ends_with("false"), "lambda = 0.01 must fail the budget: {row}");
    // norm_phi is the violator: parse columns
    let cols: Vec<&str> = row.split(',').collect();
    let phi: f64 = cols[3].parse().unwrap();
    let tail: f64 = cols[4].parse().unwrap();
    let eps: f64 = cols[0].parse().unwrap();
    assert!(phi >= eps / 4.0, "phi violates");
    assert!(tail < eps / 2.0, "tail still passes");
}

#[test]
fn sweep_writes_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(&cfgp, FAST);
    let out = blowup()
        .args(["sweep", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .env("BLOWUP_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lambda,theta,alpha,norm_exact,norm_phi,norm_tail,total,pass,error"
    );
    let totals: Vec<f64> = lines
        .clone()
        .filter(|l| !l.is_empty() && l.ends_with(','))
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    assert!(totals.windows(2).all(|w| w[0] <= w[1]), "rows sorted by total");
    assert!(dir.path().join("o/argmin.csv").exists());
}

#[test]
fn check_passes_and_fault_injection_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(&cfgp, FAST);
    let ok = blowup()
        .args(["check", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let summary = std::fs::read_to_string(dir.path().join("a/check.json")).unwrap();
    assert!(summary.contains("\"pass\": true"));

    for fault in ["perturb_a", "oracle_bias"] {
        let bad = blowup()
            .args(["check", "--config"])
            .arg(&cfgp)
            .arg("--out")
            .arg(dir.path().join(fault))
            .env("BLOWUP_FAULT", fault)
            .output()
            .unwrap();
        assert_ne!(bad.status.code(), Some(0), "fault {fault} must be detected");
    }
}

#[test]
fn simulate_streams_energy_log() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(&cfgp, FAST);
    let out = blowup()
        .args(["simulate", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(dir.path().join("o/energy.jsonl")).unwrap();
    let first = log.lines().next().unwrap();
    let v: serde_json::Value = serde_json::from_str(first).unwrap();
    for key in ["T", "e0", "es", "sup"] {
        assert!(v.get(key).is_some(), "energy log key {key}");
    }
}

#[test]
fn verify_homogeneous_blowup_near_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfgp = dir.path().join("cfg.toml");
    write(
        &cfgp,
        r#"
[grid]
points = 64

[surface]
family = "zero"

[integrator]
dtau_max = 5e-3
checkpoint_dtau = 1e-2

[verifier]
points = 512
t_max = 11.8
"#,
    );
    let out = blowup()
        .args(["verify", "--config"])
        .arg(&cfgp)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/verify_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["finite_points"], 512);
    let q = summary["compare"]["quantile_time"].as_f64().unwrap();
    assert!((q - 11.0).abs() < 0.22, "quantile time {q} within 2% of 11");
    let map = std::fs::read_to_string(dir.path().join("o/blowup_map.csv")).unwrap();
    assert!(map.starts_with("x,t_blow,sign"));
}
