use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn iongrad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iongrad"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(text.lines().count(), 1, "stderr: {text}");
    text
}

#[test]
fn field_reports_published_match() {
    let out = iongrad(&["field"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("matches published value"), "{text}");
    let vac = iongrad(&["field", "--override", "interface.model=vacuum"]);
    assert!(String::from_utf8_lossy(&vac.stdout).contains("eta                  1.00"));
}

#[test]
fn csv_format_has_full_precision() {
    let out = iongrad(&["field", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("quantity,value,unit,note\n"));
    assert!(text.contains("delta_ex_max_vacuum,0.0005767066473168"), "{text}");
}

#[test]
fn feasibility_golden_rows_pass() {
    let out = iongrad(&["feasibility"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(!text.contains("FAIL"), "{text}");
    assert!(text.matches("PASS").count() >= 18);
}

#[test]
fn empty_scenario_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    fs::write(&path, "").unwrap();
    let out = iongrad(&["feasibility", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error: class=usage "));
}

#[test]
fn unknown_key_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[geometry]\nh_um = 10\nheight = 3\n").unwrap();
    let out = iongrad(&["field", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let line = stderr_line(&out);
    assert!(line.starts_with("error: class=parse "), "{line}");
    assert!(line.contains("height"), "{line}");
}

#[test]
fn missing_file_and_bad_flags() {
    let out = iongrad(&["field", "--scenario", "/nonexistent/x.toml"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_line(&out).starts_with("error: class=io "));
    let out = iongrad(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error: class=usage "));
    let out = iongrad(&["sweep", "--axis", "h_um=1,2", "--override", "sweep.point_cap=1"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(stderr_line(&out).contains("class=cap-exceeded"));
}

fn run_into(dir: &Path, args: &[&str]) {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", dir.to_str().unwrap()]);
    let out = iongrad(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn out_dir_gets_data_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    run_into(dir.path(), &["sweep", "--seed", "5"]);
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    for key in ["tool_version=", "command=sweep", "scenario_sha256=", "seed=5", "timestamp_unix=", "outputs=sweep.csv"] {
        assert!(manifest.contains(key), "{manifest}");
    }
    let data = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(data.starts_with("h_um,delta_ex_max_v_per_m,"));
    assert_eq!(data.lines().count(), 6);
}

#[test]
fn synthesized_series_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    run_into(
        dir.path(),
        &["noise", "synth", "--seed", "4", "--override", "sample.amplitude_v2_per_m2_hz=1e-8", "--override", "sample.alpha=0"],
    );
    let series = dir.path().join("timeseries.csv");
    let out = iongrad(&["noise", "allan", "--input", series.to_str().unwrap(), "--format", "csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("tau_s,m,allan_deviation_v_per_m\n"));
    let psd = iongrad(&["noise", "psd", "--input", series.to_str().unwrap()]);
    assert!(psd.status.success());
}

#[test]
fn uncorrelated_psd_row_is_root_two() {
    let out = iongrad(&["noise", "psd", "--override", "sample.amplitude_v2_per_m2_hz=1e-8"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("differential_over_single  1.41"));
}

#[test]
fn simulate_reports_gain_agreement() {
    let out = iongrad(&["simulate", "--format", "csv", "--shots", "200"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()].parse::<f64>().unwrap();
    assert!(col("gain_relative_deviation").abs() < 1e-6);
    assert_eq!(col("shots"), 200.0);
}
